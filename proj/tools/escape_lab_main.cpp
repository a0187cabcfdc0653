// Command-line front end: run one JSON manifest and write its artifacts.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "escape_lab/manifest.hpp"

int main(int argc, char** argv) {
  CLI::App app{"escape-lab: noisy escape from a focus through an unstable limit cycle"};
  std::string manifest_path;
  std::string output_dir;
  int threads = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;

  app.add_option("--manifest", manifest_path, "path to the JSON run manifest")->required();
  app.add_option("--output", output_dir, "output directory (overrides manifest output_dir)");
  app.add_option("--threads", threads, "worker threads (0 = auto)");
  auto* seed_opt = app.add_option("--seed", seed, "master seed override");
  CLI11_PARSE(app, argc, argv);
  seed_set = seed_opt->count() > 0;

  if (threads == 0) {
    if (const char* env = std::getenv("ESCAPE_LAB_THREADS")) threads = std::atoi(env);
  }

  escape_lab::RunManifest m;
  try {
    m = escape_lab::parse_manifest_file(manifest_path);
  } catch (const escape_lab::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return static_cast<int>(escape_lab::RunStatus::WriteError);
  } catch (const std::exception& e) {
    std::cerr << "manifest error: " << e.what() << "\n";
    return static_cast<int>(escape_lab::RunStatus::ManifestInvalid);
  }

  std::cout << "escape-lab " << escape_lab::kVersion << " command=" << m.command
            << " threads=" << threads << "\n";
  const auto status = escape_lab::run(m, output_dir, threads,
                                      seed_set ? std::optional<std::uint64_t>(seed) : std::nullopt);
  if (status != escape_lab::RunStatus::Ok)
    std::cerr << "run failed with status " << static_cast<int>(status) << "\n";
  return static_cast<int>(status);
}
