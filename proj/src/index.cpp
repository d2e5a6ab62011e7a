#include "dd/index.hpp"

namespace dd {

void ProgramIndex::add_decl(const Decl& d, Diagnostics* diags) {
  auto dup = [&](const std::string& name, Span sp, const std::string& file) {
    if (diags)
      diags->push_back({codes::duplicate_name, Severity::Error,
                        "'" + name + "' is declared twice", sp, file});
  };
  if (auto* x = std::get_if<DataDecl>(&d.node)) {
    if (codata.count(x->name)) dup(x->name, d.span, d.file);
    if (!data.emplace(x->name, x).second) dup(x->name, d.span, d.file);
    for (const auto& c : x->ctors) {
      if (codefs.count(c.name) || lets.count(c.name)) dup(c.name, c.span, d.file);
      if (!ctors.emplace(c.name, CtorRef{x, &c}).second) dup(c.name, c.span, d.file);
    }
  } else if (auto* x = std::get_if<CodataDecl>(&d.node)) {
    if (data.count(x->name)) dup(x->name, d.span, d.file);
    if (!codata.emplace(x->name, x).second) dup(x->name, d.span, d.file);
    for (const auto& dt : x->dtors) {
      if (defs.count(dt.name)) dup(dt.name, dt.span, d.file);
      if (!dtors.emplace(dt.name, DtorRef{x, &dt}).second) dup(dt.name, dt.span, d.file);
    }
  } else if (auto* x = std::get_if<DefDecl>(&d.node)) {
    if (dtors.count(x->name)) dup(x->name, d.span, d.file);
    if (!defs.emplace(x->name, x).second) dup(x->name, d.span, d.file);
  } else if (auto* x = std::get_if<CodefDecl>(&d.node)) {
    if (ctors.count(x->name) || lets.count(x->name)) dup(x->name, d.span, d.file);
    if (!codefs.emplace(x->name, x).second) dup(x->name, d.span, d.file);
  } else if (auto* x = std::get_if<LetDecl>(&d.node)) {
    if (ctors.count(x->name) || codefs.count(x->name)) dup(x->name, d.span, d.file);
    if (!lets.emplace(x->name, x).second) dup(x->name, d.span, d.file);
  }
}

ProgramIndex ProgramIndex::build(const Program& p, Diagnostics* diags) {
  ProgramIndex ix;
  for (const auto& d : p.decls) ix.add_decl(d, diags);
  return ix;
}

const Telescope* ProgramIndex::typarams(const std::string& t) const {
  auto d = data.find(t);
  if (d != data.end()) return &d->second->typarams;
  auto c = codata.find(t);
  if (c != codata.end()) return &c->second->typarams;
  return nullptr;
}

const CaseClause* ProgramIndex::find_case(const DefDecl& def, const std::string& ctor) const {
  for (const auto& c : def.cases)
    if (c.ctor == ctor) return &c;
  return nullptr;
}

const CocaseClause* ProgramIndex::find_cocase(const CodefDecl& codef,
                                              const std::string& dtor) const {
  for (const auto& c : codef.cocases)
    if (c.dtor == dtor) return &c;
  return nullptr;
}

}  // namespace dd
