#define DOCTEST_CONFIG_IMPLEMENT
#include "doctest.h"

#include "dualview/common.hpp"

int main(int argc, char** argv) {
  dualview::set_log_enabled(false);
  doctest::Context context(argc, argv);
  return context.run();
}
