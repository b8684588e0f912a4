#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include "covstream/error.hpp"

int main(int argc, char** argv) {
    // warnings are asserted through custom handlers where they matter
    covstream::set_warning_handler({});
    doctest::Context context(argc, argv);
    return context.run();
}
