#include "momentlab/cli.hpp"

int main(int argc, char** argv)
{
    return momentlab::cli::run(argc, argv);
}
