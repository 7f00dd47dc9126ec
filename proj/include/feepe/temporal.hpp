#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "feepe/geometry.hpp"
#include "feepe/matching.hpp"

namespace feepe {

struct NoCandidates : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One remembered frame: the estimate, its FK state, and the camera-frame
/// working pose used for gating and keyframe selection.
struct PoolEntry {
  int frame_id = 0;
  FrameEstimate estimate;
  Pose fk_pose;       // end-effector in robot-base frame
  Pose working_pose;  // end-effector in camera frame
};

/// FK-propagated pose prediction: prev * (fk_prev^-1 * fk_curr). Exact under
/// a static camera when prev is exact.
Pose predict_pose(const Pose& prev_pose, const Pose& fk_prev, const Pose& fk_curr);

/// Angular-distance-gated store: every pair of entries is > theta apart in
/// rotation. Bounded by `capacity`; when full, the entry whose removal least
/// decreases the pool's min pairwise distance is evicted.
class MemoryPool {
 public:
  explicit MemoryPool(double theta_rad, std::size_t capacity = 64)
      : theta_(theta_rad), capacity_(capacity) {}

  /// Inserted iff min over pool of angular distance to the entry's working
  /// pose exceeds theta; an empty pool always inserts.
  bool try_insert(PoolEntry entry);

  const std::vector<PoolEntry>& entries() const { return entries_; }
  double theta() const { return theta_; }
  std::size_t capacity() const { return capacity_; }

 private:
  double theta_;
  std::size_t capacity_;
  std::vector<PoolEntry> entries_;
};

/// Greedy farthest-point sampling over rotations, seeded with `start` (which
/// is not returned). Ties broken by ascending frame_id; returns the whole
/// pool when it has at most k_f entries.
std::vector<int> select_keyframes(const MemoryPool& pool, const Pose& start,
                                  int k_f);

/// 1 or 2 rotation clusters of the frame's pose candidates.
struct SymmetryModes {
  std::vector<Pose> mode_poses;
  std::vector<std::vector<int>> members;  // candidate indices per mode
  std::vector<int> mode_inliers;          // total inlier count per mode

  bool bimodal() const { return mode_poses.size() == 2; }
};

/// Single-link clustering of candidate rotations; if more than two clusters
/// emerge, the two largest are kept (ties: larger total inlier count). Each
/// mode's pose is its most-inlier member candidate.
SymmetryModes cluster_modes(std::span<const PoseCandidate> candidates,
                            double cluster_deg);

/// Pick the (base mode, current mode) pair whose predicted relative pose
/// inverse(p_b) * p_t best matches the FK relative motion. Ties broken by
/// highest combined inlier count, then lowest mode indices. Returns the mode
/// index pair (base, current).
std::pair<int, int> disambiguate(const SymmetryModes& base,
                                 const SymmetryModes& current,
                                 const Pose& fk_rel);

}  // namespace feepe
