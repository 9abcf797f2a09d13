#include "dirac_forge/cli.hpp"

int main(int argc, char** argv)
{
    return dirac_forge::run(argc, argv);
}
