// Writes a procedural RGB-D corpus and a pool of underwater-looking images
// so the pipeline can be exercised without external datasets.
#include <iostream>

#include "CLI11.hpp"
#include "uwgan/demo.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a demo RGB-D corpus and real-image pool"};
  std::string out;
  int64_t scenes = 12;
  int64_t reals = 8;
  int64_t height = 120;
  int64_t width = 160;
  uint64_t seed = 0;
  app.add_option("--out", out, "output directory (gets corpus/ and real/)")->required();
  app.add_option("--scenes", scenes);
  app.add_option("--reals", reals);
  app.add_option("--height", height);
  app.add_option("--width", width);
  app.add_option("--seed", seed);
  CLI11_PARSE(app, argc, argv);
  uwgan::write_demo_corpus(std::filesystem::path(out) / "corpus", scenes, height, width, seed);
  uwgan::write_demo_real_pool(std::filesystem::path(out) / "real", reals, height, width, seed + 1);
  std::cout << "wrote " << scenes << " scenes and " << reals << " real images under " << out << "\n";
  return 0;
}
