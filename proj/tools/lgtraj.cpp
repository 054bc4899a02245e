#include "lgtraj/cli.hpp"

int main(int argc, char** argv)
{
    return lgtraj::cli::main(argc, argv);
}
