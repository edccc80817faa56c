#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include "deltarank/log.hpp"

int main(int argc, char** argv)
{
    deltarank::set_log_level(deltarank::LogLevel::error);
    doctest::Context context(argc, argv);
    return context.run();
}
