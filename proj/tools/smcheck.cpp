#include <csignal>
#include <iostream>

#include "smcheck/runner.hpp"

int main(int argc, char** argv)
{
    std::signal(SIGPIPE, SIG_IGN);
    return smcheck::run_cli(argc, argv, std::cout, std::cerr);
}
