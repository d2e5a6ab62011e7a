#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "dd/ast.hpp"
#include "dd/diag.hpp"

namespace dd {

// Name-indexed view of a program. Holds raw pointers into the program (and
// into any registered generated declarations); the owners must outlive it and
// stay address-stable.
struct ProgramIndex {
  struct CtorRef {
    const DataDecl* data = nullptr;
    const CtorDecl* ctor = nullptr;
  };
  struct DtorRef {
    const CodataDecl* codata = nullptr;
    const DtorDecl* dtor = nullptr;
  };

  std::unordered_map<std::string, const DataDecl*> data;
  std::unordered_map<std::string, const CodataDecl*> codata;
  std::unordered_map<std::string, const DefDecl*> defs;
  std::unordered_map<std::string, const CodefDecl*> codefs;
  std::unordered_map<std::string, const LetDecl*> lets;
  std::unordered_map<std::string, CtorRef> ctors;
  std::unordered_map<std::string, DtorRef> dtors;

  void add_decl(const Decl& d, Diagnostics* diags);
  static ProgramIndex build(const Program& p, Diagnostics* diags = nullptr);

  bool is_data(const std::string& t) const { return data.count(t) > 0; }
  bool is_codata(const std::string& t) const { return codata.count(t) > 0; }
  const Telescope* typarams(const std::string& t) const;

  const CaseClause* find_case(const DefDecl& def, const std::string& ctor) const;
  const CocaseClause* find_cocase(const CodefDecl& codef, const std::string& dtor) const;
};

}  // namespace dd
