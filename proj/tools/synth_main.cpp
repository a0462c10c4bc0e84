#include <iostream>

#include <CLI11.hpp>

#include "prosobench/error.hpp"
#include "synth/synth.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Write the synthetic pipeline fixture."};
  app.name("prosobench-synth");
  std::string out = "fixtures/synthetic";
  prosobench::synth::ProsodyFixtureSpec spec;
  app.add_option("--out", out, "Fixture directory");
  app.add_option("--seed", spec.seed, "Generator seed");
  app.add_option("--utterances", spec.utterances_per_speaker, "Utterances per speaker");
  CLI11_PARSE(app, argc, argv);
  try {
    prosobench::synth::write_pipeline_fixture(out, spec);
  } catch (const prosobench::Error& e) {
    std::cerr << "prosobench-synth: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
