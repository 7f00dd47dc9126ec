#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "feepe/binary_io.hpp"
#include "feepe/json_io.hpp"
#include "feepe/metrics.hpp"
#include "feepe/pipeline.hpp"
#include "feepe/synth.hpp"
#include "feepe/template_store.hpp"

namespace {

feepe::PipelineConfig load_config(const std::string& config_path,
                                  const std::string& variant,
                                  std::uint64_t seed, bool seed_set) {
  feepe::PipelineConfig cfg;
  if (!config_path.empty()) cfg = feepe::PipelineConfig::load_file(config_path);
  if (!variant.empty()) cfg.variant = feepe::variant_from_string(variant);
  if (seed_set) cfg.seed = seed;
  cfg.validate();
  return cfg;
}

int run(int argc, char** argv) {
  CLI::App app{"Training-free end-effector 6D pose estimation"};
  app.require_subcommand(1);

  std::string config_path, variant;
  std::uint64_t seed = 0;
  bool quiet = false;
  app.add_option("--config", config_path, "pipeline config file");
  app.add_flag("--quiet", quiet, "suppress stderr progress");

  // templates
  auto* cmd_templates = app.add_subcommand(
      "templates", "Render the template store from a model point set");
  std::string model_path, out_dir;
  cmd_templates->add_option("--model", model_path, "model points file")
      ->required();
  cmd_templates->add_option("--out", out_dir, "output directory")->required();
  cmd_templates->add_option("--seed", seed, "override config seed");

  // synth
  auto* cmd_synth =
      app.add_subcommand("synth", "Generate a synthetic ground-truth sequence");
  std::string scene_path, synth_out;
  cmd_synth->add_option("--scene", scene_path, "scene config JSON")->required();
  cmd_synth->add_option("--out", synth_out, "output directory")->required();

  // estimate
  auto* cmd_estimate =
      app.add_subcommand("estimate", "Run the pose estimation pipeline");
  std::string seq_dir, tpl_dir, est_out;
  cmd_estimate->add_option("--sequence", seq_dir, "sequence directory")
      ->required();
  cmd_estimate->add_option("--templates", tpl_dir, "template store directory")
      ->required();
  cmd_estimate->add_option("--out", est_out, "estimates JSONL output")
      ->required();
  cmd_estimate->add_option("--variant", variant, "A|B|C|D (default D)");
  bool est_seed_set = false;
  cmd_estimate->add_option("--seed", seed, "override config seed")
      ->each([&](const std::string&) { est_seed_set = true; });

  // eval
  auto* cmd_eval = app.add_subcommand("eval", "Evaluate pose estimates");
  std::string eval_estimates, eval_seq, eval_model, curve_csv, ablation_tpl;
  double threshold = 0.01;
  bool exclude_predicted = false;
  cmd_eval->add_option("--estimates", eval_estimates, "estimates JSONL");
  cmd_eval->add_option("--sequence", eval_seq, "sequence directory with ground truth")
      ->required();
  cmd_eval->add_option("--model", eval_model,
                       "model points file (default: sequence model)");
  cmd_eval->add_option("--threshold", threshold, "AUC max threshold, meters");
  cmd_eval->add_option("--curve", curve_csv, "write accuracy curve CSV");
  cmd_eval->add_flag("--exclude-predicted", exclude_predicted,
                     "skip frames flagged predicted_only");
  cmd_eval->add_option("--ablation", ablation_tpl,
                       "template store dir: run variants A-D and print a table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (cmd_templates->parsed()) {
    const auto model = feepe::load_model_points(model_path);
    auto cfg = load_config(config_path, "", seed, cmd_templates->count("--seed") > 0);
    if (!quiet)
      std::cerr << "building " << cfg.n_sphere * cfg.n_inplane
                << " templates...\n";
    const auto store = feepe::TemplateStore::build(model, cfg.template_params());
    store.save(out_dir);
    if (!quiet)
      std::cerr << "wrote " << store.templates.size() << " templates to "
                << out_dir << "\n";
    return 0;
  }

  if (cmd_synth->parsed()) {
    const auto cfg = feepe::scene_config_from_json_file(scene_path);
    const auto frames = feepe::generate_sequence(cfg);
    feepe::save_sequence(synth_out, cfg, frames);
    if (!quiet)
      std::cerr << "wrote " << frames.size() << " frames to " << synth_out
                << "\n";
    return 0;
  }

  if (cmd_estimate->parsed()) {
    const auto cfg = load_config(config_path, variant, seed, est_seed_set);
    const auto seq = feepe::load_sequence(seq_dir);
    const auto store = feepe::TemplateStore::load(tpl_dir);
    feepe::Pipeline pipeline(store, seq.intrinsics, cfg);
    std::vector<feepe::FrameResult> results;
    for (const auto& f : seq.frames) {
      results.push_back(pipeline.process_frame(f.frame_id, f.features, f.mask,
                                               f.depth, f.fk_pose));
      if (!quiet)
        std::cerr << "frame " << f.frame_id << ": candidates "
                  << results.back().candidate_count << ", pool "
                  << results.back().pool_size << ", "
                  << results.back().wall_time_ms << " ms\n";
    }
    feepe::write_estimates(est_out, results);
    return 0;
  }

  if (cmd_eval->parsed()) {
    const auto seq = feepe::load_sequence(eval_seq);
    const auto model =
        eval_model.empty() ? seq.model : feepe::load_model_points(eval_model);
    if (model.empty())
      throw feepe::ConfigError("eval: no model available for metrics");

    if (!ablation_tpl.empty()) {
      const auto store = feepe::TemplateStore::load(ablation_tpl);
      auto cfg = load_config(config_path, "", seed, false);
      std::cout << "variant,add_auc,adds_auc\n";
      for (const auto v :
           {feepe::PipelineVariant::kPnpOnly, feepe::PipelineVariant::kSingleFrame,
            feepe::PipelineVariant::kTemporal, feepe::PipelineVariant::kFull}) {
        cfg.variant = v;
        const auto results = feepe::run_sequence(seq, store, cfg);
        const auto s = feepe::evaluate_estimates(results, seq, model, threshold,
                                                 !exclude_predicted);
        std::cout << feepe::to_string(v) << ',' << s.add_auc << ','
                  << s.adds_auc << '\n';
      }
      return 0;
    }

    if (eval_estimates.empty())
      throw feepe::ConfigError("eval: --estimates required unless --ablation");
    const auto results = feepe::read_estimates(eval_estimates);
    const auto s = feepe::evaluate_estimates(results, seq, model, threshold,
                                             !exclude_predicted, curve_csv);
    feepe::json out{{"add_auc", s.add_auc},
                    {"adds_auc", s.adds_auc},
                    {"n_frames", s.n_frames}};
    std::cout << out.dump(2) << '\n';
    return 0;
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const feepe::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const feepe::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const feepe::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
