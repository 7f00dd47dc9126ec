#include "feepe/temporal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace feepe {

Pose predict_pose(const Pose& prev_pose, const Pose& fk_prev,
                  const Pose& fk_curr) {
  return prev_pose * (fk_prev.inverse() * fk_curr);
}

namespace {

double min_pairwise_distance(const std::vector<PoolEntry>& entries,
                             std::size_t skip) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (i == skip) continue;
    for (std::size_t j = i + 1; j < entries.size(); ++j) {
      if (j == skip) continue;
      best = std::min(best, angular_distance(entries[i].working_pose,
                                             entries[j].working_pose));
    }
  }
  return best;
}

}  // namespace

bool MemoryPool::try_insert(PoolEntry entry) {
  for (const auto& e : entries_) {
    if (angular_distance(e.working_pose, entry.working_pose) <= theta_)
      return false;
  }
  if (entries_.size() >= capacity_) {
    // Evict the entry whose removal least hurts the pool's dispersion.
    std::size_t victim = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      const double d = min_pairwise_distance(entries_, i);
      if (d > best) {
        best = d;
        victim = i;
      }
    }
    entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(victim));
  }
  entries_.push_back(std::move(entry));
  return true;
}

std::vector<int> select_keyframes(const MemoryPool& pool, const Pose& start,
                                  int k_f) {
  const auto& entries = pool.entries();
  const int n = static_cast<int>(entries.size());
  std::vector<int> selected;
  if (n == 0 || k_f < 1) return selected;

  // Min distance of each entry to the selected set plus the start pose.
  std::vector<double> min_dist(n);
  for (int i = 0; i < n; ++i)
    min_dist[i] = angular_distance(entries[i].working_pose, start);

  std::vector<char> used(n, 0);
  const int want = std::min(k_f, n);
  for (int step = 0; step < want; ++step) {
    int pick = -1;
    for (int i = 0; i < n; ++i) {
      if (used[i]) continue;
      if (pick < 0 || min_dist[i] > min_dist[pick] ||
          (min_dist[i] == min_dist[pick] &&
           entries[i].frame_id < entries[pick].frame_id))
        pick = i;
    }
    used[pick] = 1;
    selected.push_back(pick);
    for (int i = 0; i < n; ++i) {
      if (used[i]) continue;
      min_dist[i] = std::min(min_dist[i],
                             angular_distance(entries[i].working_pose,
                                              entries[pick].working_pose));
    }
  }
  return selected;
}

SymmetryModes cluster_modes(std::span<const PoseCandidate> candidates,
                            double cluster_deg) {
  if (candidates.empty())
    throw NoCandidates("cluster_modes: no candidates");
  const double thresh = cluster_deg * std::numbers::pi / 180.0;
  const int n = static_cast<int>(candidates.size());

  // Single-link clustering via union-find.
  std::vector<int> parent(n);
  for (int i = 0; i < n; ++i) parent[i] = i;
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (angular_distance(candidates[i].pose, candidates[j].pose) <= thresh) {
        const int a = find(i), b = find(j);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }

  std::vector<std::vector<int>> clusters;
  std::vector<int> root_to_cluster(n, -1);
  for (int i = 0; i < n; ++i) {
    const int r = find(i);
    if (root_to_cluster[r] < 0) {
      root_to_cluster[r] = static_cast<int>(clusters.size());
      clusters.emplace_back();
    }
    clusters[root_to_cluster[r]].push_back(i);
  }

  auto total_inliers = [&](const std::vector<int>& c) {
    int t = 0;
    for (int i : c) t += static_cast<int>(candidates[i].inliers.size());
    return t;
  };

  // Keep the two largest clusters (ties: larger total inlier count, then
  // earliest member index for determinism).
  std::vector<int> order(clusters.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (clusters[a].size() != clusters[b].size())
      return clusters[a].size() > clusters[b].size();
    const int ia = total_inliers(clusters[a]), ib = total_inliers(clusters[b]);
    if (ia != ib) return ia > ib;
    return clusters[a][0] < clusters[b][0];
  });

  SymmetryModes modes;
  const std::size_t keep = std::min<std::size_t>(2, clusters.size());
  for (std::size_t mi = 0; mi < keep; ++mi) {
    const auto& c = clusters[order[mi]];
    int best = c[0];
    for (int i : c)
      if (candidates[i].inliers.size() > candidates[best].inliers.size())
        best = i;
    modes.mode_poses.push_back(candidates[best].pose);
    modes.members.push_back(c);
    modes.mode_inliers.push_back(total_inliers(c));
  }
  return modes;
}

std::pair<int, int> disambiguate(const SymmetryModes& base,
                                 const SymmetryModes& current,
                                 const Pose& fk_rel) {
  int best_b = 0, best_t = 0;
  double best_omega = std::numeric_limits<double>::infinity();
  int best_inl = -1;
  for (std::size_t b = 0; b < base.mode_poses.size(); ++b) {
    for (std::size_t t = 0; t < current.mode_poses.size(); ++t) {
      const Pose rel = base.mode_poses[b].inverse() * current.mode_poses[t];
      const double omega = angular_distance(fk_rel, rel);
      const int inl = base.mode_inliers[b] + current.mode_inliers[t];
      if (omega < best_omega ||
          (omega == best_omega && inl > best_inl)) {
        best_omega = omega;
        best_inl = inl;
        best_b = static_cast<int>(b);
        best_t = static_cast<int>(t);
      }
    }
  }
  return {best_b, best_t};
}

}  // namespace feepe
