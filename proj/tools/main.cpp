#include <iostream>

#include "fieldauth_cli.hpp"

int main(int argc, char** argv) {
  return fieldauth::cli::dispatch({argv + 1, argv + argc}, std::cout, std::cerr);
}
