#include "commands.hpp"
#include "config.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"qatok: quality-aware tokenizer training and application"};
  app.footer(qatok::cli::config_help() +
             "\nEnvironment: QATOK_THREADS caps the worker count.\n"
             "Exit codes: 0 ok, 1 error, 2 invalid config or missing input, 3 training diverged.");
  app.require_subcommand(1, 1);

  qatok::cli::Options opts;
  std::uint64_t seed = 0;
  std::string out;
  const std::pair<const char*, const char*> commands[] = {
      {"train", "Build a vocabulary (and learned parameters) from the configured corpus"},
      {"encode", "Encode the configured corpus with a trained vocabulary"},
      {"decode", "Decode a token file back to atomic symbols"},
      {"inspect", "Print vocabulary statistics and theta_adapt"},
      {"eval", "Evaluate the tokenization objective on the configured corpus"},
      {"sample", "Draw a quality-variance weighted subset and write its manifest"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opts.config, "Config file (section.key = value)")->required();
    sub->add_option("--seed", seed, "Root seed, overrides run.seed");
    sub->add_option("--out", out, "Output directory (train) or file (other commands)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : qatok::cli::kExitInvalid;
  }

  const auto* sub = app.get_subcommands().front();
  if (sub->count("--seed")) opts.seed = seed;
  if (!out.empty()) opts.out = out;
  return qatok::cli::run_command(sub->get_name(), opts, std::cout, std::cerr);
}
