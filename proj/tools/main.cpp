#include <topodistill/cli.hpp>

int main(int argc, char** argv) { return topodistill::cli_dispatch(argc, argv); }
