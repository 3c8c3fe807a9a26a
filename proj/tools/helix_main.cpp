#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "helix/errors.hpp"
#include "helix/pipeline.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::string out_dir;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "pipeline config (JSON)")
      ->required();
  cmd->add_option("--seed", opts.seed, "override master_seed");
  cmd->add_option("--out", opts.out_dir, "override output directory");
}

helix::PipelineConfig resolve(const CommonOpts& opts) {
  auto cfg = helix::PipelineConfig::load(opts.config_path);
  if (opts.seed) cfg.master_seed = *opts.seed;
  if (!opts.out_dir.empty()) cfg.output_dir = opts.out_dir;
  if (cfg.output_dir.empty())
    throw helix::ConfigError("no output directory (config output_dir or --out)");
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"helix: single-read reconstruction pipeline for DNA data storage"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string scope = "eval";
  std::string algorithm = "identity";
  int copies = 1;
  std::vector<double> factors{1.0, 2.0, 4.0};

  auto* c_encode = app.add_subcommand("encode", "encode the input file to DNA sequences");
  auto* c_simulate = app.add_subcommand("simulate", "pass sequences through the DIS channel");
  auto* c_classify = app.add_subcommand("classify", "partition reads into SL/LL/CLGC/CLBC");
  auto* c_gen = app.add_subcommand("gen-train", "build the noise-injection training corpus");
  auto* c_train = app.add_subcommand("train", "train the three-model ensemble");
  auto* c_recon = app.add_subcommand("reconstruct", "reconstruct reads with constrained beam search");
  auto* c_decode = app.add_subcommand("decode", "decode reconstructed sequences back to bytes");
  auto* c_eval = app.add_subcommand("evaluate", "score a reconstruction algorithm");
  auto* c_run = app.add_subcommand("run", "run all stages end to end");
  auto* c_sweep = app.add_subcommand("sweep", "noise-factor sweep with baselines");

  for (auto* c : {c_encode, c_simulate, c_classify, c_gen, c_train, c_recon,
                  c_decode, c_eval, c_run, c_sweep})
    add_common(c, opts);
  c_recon->add_option("--scope", scope, "eval|all")->check(CLI::IsMember({"eval", "all"}));
  c_eval->add_option("--algorithm", algorithm, "identity|bma|srr")
      ->check(CLI::IsMember({"identity", "bma", "srr"}));
  c_eval->add_option("--copies", copies, "reads per cluster (bma)");
  c_sweep->add_option("--factors", factors, "noise factors")->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    auto cfg = resolve(opts);
    helix::RunPaths run{cfg.output_dir};

    if (c_encode->parsed()) helix::cmd_encode(cfg, run);
    else if (c_simulate->parsed()) helix::cmd_simulate(cfg, run);
    else if (c_classify->parsed()) helix::cmd_classify(cfg, run);
    else if (c_gen->parsed()) helix::cmd_gen_train(cfg, run);
    else if (c_train->parsed()) helix::cmd_train(cfg, run);
    else if (c_recon->parsed())
      helix::cmd_reconstruct(cfg, run,
                             scope == "all" ? helix::ReconScope::All
                                            : helix::ReconScope::Eval);
    else if (c_decode->parsed()) helix::cmd_decode(cfg, run);
    else if (c_eval->parsed()) {
      auto report = helix::cmd_evaluate(cfg, run, algorithm, copies);
      std::cout << algorithm << (algorithm == "bma" ? "(t=" + std::to_string(copies) + ")" : "")
                << ": S=" << report.success_rate
                << " E=" << report.mean_edit_error_rate
                << " H=" << report.mean_hamming_error_rate << '\n';
    } else if (c_run->parsed()) helix::cmd_run(cfg, run);
    else if (c_sweep->parsed()) {
      auto rows = helix::cmd_sweep(cfg, run, factors);
      for (const auto& r : rows)
        std::cout << "factor " << r.factor << " " << r.algorithm << "(t=" << r.t
                  << "): S=" << r.success << " E=" << r.edit
                  << " E_norm=" << r.edit_normalized << '\n';
    }
  } catch (const helix::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const helix::ArtifactError& e) {
    std::cerr << "artifact error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
