#define DOCTEST_CONFIG_IMPLEMENT
#include "testing.hpp"
#include <spdlog/spdlog.h>
#include <torch/torch.h>

int main(int argc, char** argv) {
  torch::set_num_threads(1);
  spdlog::set_level(spdlog::level::err);
  doctest::Context ctx(argc, argv);
  return ctx.run();
}
