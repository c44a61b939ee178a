#include "hops/cli.hpp"

int main(int argc, char** argv) {
  return hops::cli::run(argc, argv);
}
