#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace limeattack::cli {

// Exit codes: 0 ok, 1 IO/transport failure, 2 invalid configuration.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace limeattack::cli
