#include "gmf/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
  return gmf::dispatch(argc, argv, std::cout, std::cerr);
}
