#include <iostream>

#include "cbir/service.hpp"

int main(int argc, char** argv) {
    return cbir::cli_dispatch(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
