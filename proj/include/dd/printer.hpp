#pragma once

#include <string>

#include "dd/ast.hpp"

namespace dd {

// Pretty-prints to re-parseable source. Binder names are the user names;
// colliding names in nested scopes are disambiguated with primes.
std::string print(const Program& p, bool include_prelude = false);
std::string print(const Decl& d);
std::string print(const ExprPtr& e);

}  // namespace dd
