#include "varscope/independence.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <sstream>

#include "varscope/errors.hpp"

namespace varscope::indep {

namespace {

constexpr int kMaxGraphK = 8;
constexpr std::size_t kMaxDecomposeRight = 12;

void validate_statement(const CIStatement& s) {
  if (s.given.has_y) throw DomainError("ci statement: Y cannot appear in the given set");
  if (s.right.empty()) throw DomainError("ci statement: empty right side");
  if (s.left.vars.empty() && !s.left.has_y && !s.left.has_data) {
    throw DomainError("ci statement: empty left side");
  }
  for (int v : s.right) {
    if (s.left.vars.count(v) || s.given.vars.count(v)) {
      throw DomainError("ci statement: sides are not disjoint");
    }
  }
  for (int v : s.left.vars) {
    if (s.given.vars.count(v)) throw DomainError("ci statement: sides are not disjoint");
  }
}

int infer_universe(const std::set<CIStatement>& base) {
  int K = 0;
  for (const auto& s : base) {
    for (int v : s.left.vars) K = std::max(K, v);
    for (int v : s.right) K = std::max(K, v);
    for (int v : s.given.vars) K = std::max(K, v);
  }
  return K;
}

std::vector<std::vector<int>> permutations(int K) {
  std::vector<int> base(static_cast<std::size_t>(K));
  for (int i = 0; i < K; ++i) base[static_cast<std::size_t>(i)] = i + 1;
  std::vector<std::vector<int>> out;
  do {
    out.push_back(base);
  } while (std::next_permutation(base.begin(), base.end()));
  return out;
}

std::set<int> prefix_set(const std::vector<int>& ordering, int k) {
  return {ordering.begin(), ordering.begin() + (k - 1)};
}

CIStatement lemma_hypothesis(int i, int K) {
  CIStatement q;
  q.left.vars = {i};
  for (int v = 1; v <= K; ++v) {
    if (v != i) q.right.insert(v);
  }
  q.given.has_data = true;
  return q;
}

}  // namespace

CIStatement make_ci(CiSide left, std::set<int> right, CiSide given) {
  CIStatement s{std::move(left), std::move(right), std::move(given)};
  validate_statement(s);
  return s;
}

std::set<CIStatement> derive_ci(const std::set<CIStatement>& base, int K) {
  for (const auto& s : base) validate_statement(s);
  if (K == 0) K = infer_universe(base);

  std::set<CIStatement> closed = base;
  std::deque<CIStatement> queue(base.begin(), base.end());
  const auto push = [&](CIStatement s) {
    if (closed.insert(s).second) queue.push_back(std::move(s));
  };

  while (!queue.empty()) {
    const CIStatement s = queue.front();
    queue.pop_front();

    // (a) split of a structural statement (Y,D) ⫫ R | G.
    if (s.left.has_y && s.left.has_data && s.left.vars.empty()) {
      CIStatement y_part;
      y_part.left.has_y = true;
      y_part.right = s.right;
      y_part.given = s.given;
      y_part.given.has_data = true;
      push(std::move(y_part));

      CIStatement d_part;
      d_part.left.has_data = true;
      d_part.right = s.right;
      d_part.given = s.given;
      push(std::move(d_part));
    }

    // (b) ordering lemma for a posterior-independence statement.
    if (!s.left.has_y && !s.left.has_data && s.left.vars.size() == 1 && s.given.has_data &&
        s.given.vars.empty() && static_cast<int>(s.right.size()) == K - 1) {
      const int i = *s.left.vars.begin();
      for (int u : s.right) {
        CIStatement derived;
        derived.left.vars = {i};
        derived.right = {u};
        derived.given.has_data = true;
        for (int v = 1; v < u; ++v) {
          if (v != i) derived.given.vars.insert(v);
        }
        push(std::move(derived));
      }
    }

    // (c) decomposition of the right side.
    if (s.right.size() > 1 && s.right.size() <= kMaxDecomposeRight) {
      const std::vector<int> vars(s.right.begin(), s.right.end());
      const std::size_t n = vars.size();
      for (std::size_t mask = 1; mask + 1 < (1u << n); ++mask) {
        CIStatement sub = s;
        sub.right.clear();
        for (std::size_t b = 0; b < n; ++b) {
          if (mask & (1u << b)) sub.right.insert(vars[b]);
        }
        push(std::move(sub));
      }
    }
  }
  return closed;
}

bool entails(const std::set<CIStatement>& closure, const CIStatement& query) {
  return closure.count(query) > 0;
}

std::string TermRef::label() const {
  std::string digits;
  bool wide = ordering.size() > 9;
  for (std::size_t i = 0; i < ordering.size(); ++i) {
    if (wide && i > 0) digits += ",";
    digits += std::to_string(ordering[i]);
  }
  return "T[" + digits + "]_" + std::to_string(k);
}

ImplicationGraph build_implication_graph(int K, const std::set<CIStatement>& ci) {
  if (K < 1) throw DomainError("implication graph: K must be >= 1");
  if (K > kMaxGraphK) throw DomainError("implication graph: K > 8 not supported");

  const auto closure = derive_ci(ci, K);
  std::vector<bool> licensed(static_cast<std::size_t>(K) + 1, false);
  for (int i = 1; i <= K; ++i) {
    licensed[static_cast<std::size_t>(i)] = K > 1 && entails(closure, lemma_hypothesis(i, K));
  }

  ImplicationGraph g;
  g.K = K;
  const auto perms = permutations(K);
  for (const auto& p : perms) {
    for (int k = 1; k <= K; ++k) g.nodes.push_back({p, k});
  }

  for (const auto& a : perms) {
    for (int i = 1; i <= K; ++i) {
      const int var = a[static_cast<std::size_t>(i - 1)];
      const auto pre_a = prefix_set(a, i);
      for (const auto& b : perms) {
        if (&b == &a) continue;
        // Clause 1: same variable at the same position over the same prefix
        // set; record each unordered pair once.
        if (b[static_cast<std::size_t>(i - 1)] == var && prefix_set(b, i) == pre_a && a < b) {
          g.edges.push_back({{a, i}, {b, i}, EdgeKind::two_sided, 0});
        }
        // Clause 2: the variance variable moves left, its new prefix a strict
        // subset of the old one; needs the posterior-independence licence.
        if (licensed[static_cast<std::size_t>(var)]) {
          for (int j = 1; j < i; ++j) {
            if (b[static_cast<std::size_t>(j - 1)] != var) continue;
            const auto pre_b = prefix_set(b, j);
            if (std::includes(pre_a.begin(), pre_a.end(), pre_b.begin(), pre_b.end())) {
              g.edges.push_back({{a, i}, {b, j}, EdgeKind::one_sided, var});
            }
          }
        }
      }
    }
  }
  std::sort(g.edges.begin(), g.edges.end());
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
  return g;
}

ImplicationGraph propagate_zero_terms(const std::vector<ZeroFact>& facts,
                                      const std::set<CIStatement>& ci, int K) {
  for (const auto& f : facts) {
    if (f.term.k < 1 || f.term.k > K) {
      throw DomainError("propagate_zero_terms: term index must lie in 1..K "
                        "(the leading term is never zero)");
    }
    if (static_cast<int>(f.term.ordering.size()) != K) {
      throw DomainError("propagate_zero_terms: ordering length must be K");
    }
    std::set<int> seen(f.term.ordering.begin(), f.term.ordering.end());
    if (static_cast<int>(seen.size()) != K || *seen.begin() != 1 || *seen.rbegin() != K) {
      throw DomainError("propagate_zero_terms: ordering must be a permutation of 1..K");
    }
  }

  ImplicationGraph g = build_implication_graph(K, ci);

  std::map<TermRef, ZeroFact> known;
  std::deque<TermRef> queue;
  const auto add = [&](const TermRef& t, Provenance prov, const std::string& rule) {
    if (known.count(t)) return;
    known.emplace(t, ZeroFact{t, prov, rule});
    queue.push_back(t);
  };
  for (const auto& f : facts) add(f.term, Provenance::asserted, f.rule.empty() ? "asserted" : f.rule);

  while (!queue.empty()) {
    const TermRef t = queue.front();
    queue.pop_front();
    for (const auto& e : g.edges) {
      if (e.kind == EdgeKind::two_sided) {
        if (e.from == t) add(e.to, Provenance::derived, "clause1");
        if (e.to == t) add(e.from, Provenance::derived, "clause1");
      } else if (e.from == t) {
        add(e.to, Provenance::derived, "clause2");
      }
    }
  }

  g.zeros.reserve(known.size());
  for (const auto& [_, fact] : known) g.zeros.push_back(fact);
  return g;
}

ReductionResult reduce_plan(const HierarchySpec& spec, const ExpansionPlan& plan,
                            const std::set<CIStatement>& ci) {
  const ExpansionPlan checked = validate_plan(spec, plan);
  std::map<std::string, int> index_of;
  for (std::size_t i = 0; i < spec.levels.size(); ++i) {
    index_of[spec.levels[i].name] = static_cast<int>(i) + 1;
  }

  const auto closure = derive_ci(ci, spec.K);
  const std::size_t u = checked.blocks.size();
  for (std::size_t m = 0; m < u; ++m) {
    CIStatement query;
    query.left.has_y = true;
    query.left.has_data = true;
    for (std::size_t k = 0; k < m; ++k) {
      for (const auto& name : checked.blocks[k]) query.given.vars.insert(index_of.at(name));
    }
    for (std::size_t k = m; k < u; ++k) {
      for (const auto& name : checked.blocks[k]) query.right.insert(index_of.at(name));
    }
    if (entails(closure, query)) {
      ReductionResult out;
      out.kept_blocks = m;
      out.plan.blocks.assign(checked.blocks.begin(),
                             checked.blocks.begin() + static_cast<std::ptrdiff_t>(m));
      out.plan.latent = checked.latent;
      for (std::size_t k = m; k < u; ++k) {
        for (const auto& name : checked.blocks[k]) out.plan.latent.push_back(name);
        ZeroFact fact;
        fact.term.k = static_cast<int>(k) + 1;
        fact.provenance = Provenance::derived;
        fact.rule = "structural-reduction";
        out.dropped.push_back(fact);
      }
      return out;
    }
  }
  ReductionResult out;
  out.plan = checked;
  out.kept_blocks = u;
  return out;
}

namespace {

CiSide side_from_json(const nlohmann::json& arr, const HierarchySpec* spec, bool allow_y) {
  CiSide side;
  for (const auto& item : arr) {
    const std::string name = item.get<std::string>();
    if (name == "Y") {
      if (!allow_y) throw DomainError("ci document: Y cannot appear here");
      side.has_y = true;
    } else if (name == "D") {
      side.has_data = true;
    } else if (name.size() > 1 && name[0] == 'V' &&
               name.find_first_not_of("0123456789", 1) == std::string::npos) {
      side.vars.insert(std::stoi(name.substr(1)));
    } else if (spec != nullptr && spec->has_variable(name)) {
      for (std::size_t i = 0; i < spec->levels.size(); ++i) {
        if (spec->levels[i].name == name) side.vars.insert(static_cast<int>(i) + 1);
      }
    } else {
      throw DomainError("ci document: unknown atom '" + name + "'");
    }
  }
  return side;
}

}  // namespace

std::set<CIStatement> ci_from_json(const nlohmann::json& doc, const HierarchySpec* spec) {
  std::set<CIStatement> out;
  if (!doc.is_array()) throw DomainError("ci document: expected a JSON array");
  for (const auto& item : doc) {
    CIStatement s;
    s.left = side_from_json(item.at("left"), spec, true);
    const CiSide right = side_from_json(item.at("right"), spec, false);
    if (right.has_data) throw DomainError("ci document: D cannot appear on the right");
    s.right = right.vars;
    if (item.contains("given")) s.given = side_from_json(item.at("given"), spec, false);
    validate_statement(s);
    out.insert(std::move(s));
  }
  return out;
}

nlohmann::json to_json(const std::set<CIStatement>& set) {
  nlohmann::json arr = nlohmann::json::array();
  const auto side_json = [](const CiSide& side) {
    nlohmann::json a = nlohmann::json::array();
    if (side.has_y) a.push_back("Y");
    if (side.has_data) a.push_back("D");
    for (int v : side.vars) a.push_back("V" + std::to_string(v));
    return a;
  };
  for (const auto& s : set) {
    nlohmann::json item;
    item["left"] = side_json(s.left);
    nlohmann::json right = nlohmann::json::array();
    for (int v : s.right) right.push_back("V" + std::to_string(v));
    item["right"] = right;
    item["given"] = side_json(s.given);
    arr.push_back(std::move(item));
  }
  return arr;
}

nlohmann::json to_json(const ImplicationGraph& graph) {
  nlohmann::json doc;
  doc["K"] = graph.K;
  doc["nodes"] = nlohmann::json::array();
  for (const auto& n : graph.nodes) doc["nodes"].push_back(n.label());
  doc["edges"] = nlohmann::json::array();
  for (const auto& e : graph.edges) {
    nlohmann::json edge;
    edge["from"] = e.from.label();
    edge["to"] = e.to.label();
    edge["kind"] = e.kind == EdgeKind::two_sided ? "two_sided" : "one_sided";
    if (e.kind == EdgeKind::one_sided) edge["licensed_by"] = "V" + std::to_string(e.licensed_by);
    doc["edges"].push_back(std::move(edge));
  }
  doc["zeros"] = nlohmann::json::array();
  for (const auto& z : graph.zeros) {
    doc["zeros"].push_back({{"term", z.term.label()},
                            {"provenance", z.provenance == Provenance::asserted ? "asserted" : "derived"},
                            {"rule", z.rule}});
  }
  return doc;
}

std::string to_dot(const ImplicationGraph& graph) {
  std::ostringstream out;
  out << "digraph implications {\n";
  out << "  rankdir=LR;\n";
  std::set<std::string> zero_labels;
  for (const auto& z : graph.zeros) zero_labels.insert(z.term.label());
  for (const auto& n : graph.nodes) {
    out << "  \"" << n.label() << "\"";
    if (zero_labels.count(n.label())) out << " [style=filled, fillcolor=lightgrey]";
    out << ";\n";
  }
  for (const auto& e : graph.edges) {
    out << "  \"" << e.from.label() << "\" -> \"" << e.to.label() << "\"";
    if (e.kind == EdgeKind::two_sided) {
      out << " [dir=both, style=bold]";
    } else {
      // Style one-sided edges by the licensing variable, highest index plain.
      const int rank = graph.K - e.licensed_by;
      const char* style = rank == 0 ? "solid" : rank == 1 ? "dashed" : "dotted";
      out << " [style=" << style << ", label=\"V" << e.licensed_by << "\"]";
    }
    out << ";\n";
  }
  out << "}\n";
  return out.str();
}

TermRef parse_term_ref(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw DomainError("term reference must look like '123:3' (ordering:k)");
  }
  TermRef ref;
  const std::string digits = text.substr(0, colon);
  for (char c : digits) {
    if (c == ',') continue;
    if (c < '1' || c > '9') throw DomainError("term reference: bad ordering digit in " + text);
    ref.ordering.push_back(c - '0');
  }
  ref.k = std::stoi(text.substr(colon + 1));
  return ref;
}

}  // namespace varscope::indep
