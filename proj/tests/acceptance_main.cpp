#include <iostream>

#include "heraldsim/acceptance.hpp"

int main() {
    return heraldsim::print_acceptance(std::cout, heraldsim::run_acceptance());
}
