#include "elevate/infer.hpp"

#include <algorithm>
#include <cassert>
#include <functional>
#include <sstream>

#include "elevate/pretty.hpp"

namespace elevate {

namespace {

[[noreturn]] void unify_fail(const std::string& msg, Span sp) {
  throw CompileError(codes::unify, msg, sp);
}

[[noreturn]] void kind_fail(const std::string& msg, Span sp) {
  throw CompileError(codes::kind, msg, sp);
}

}  // namespace

// ---------------------------------------------------------------------------
// store

NodeId TypeStore::alloc(TypeNode n) {
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId TypeStore::fresh_var(Kind k, std::string hint) {
  TypeNode n;
  n.tag = TypeNode::Tag::Var;
  n.kind = k;
  n.name_hint = std::move(hint);
  NodeId id = alloc(std::move(n));
  if (k.is_row()) row_vars_.emplace_back(id, k.row);
  return id;
}

NodeId TypeStore::arrow(NodeId a, NodeId b) {
  TypeNode n;
  n.tag = TypeNode::Tag::Arrow;
  n.a = a;
  n.b = b;
  return alloc(std::move(n));
}

NodeId TypeStore::record(NodeId row) {
  TypeNode n;
  n.tag = TypeNode::Tag::Record;
  n.a = row;
  return alloc(std::move(n));
}

NodeId TypeStore::variant(NodeId row) {
  TypeNode n;
  n.tag = TypeNode::Tag::Variant;
  n.a = row;
  return alloc(std::move(n));
}

NodeId TypeStore::row_empty() {
  TypeNode n;
  n.tag = TypeNode::Tag::RowEmpty;
  return alloc(std::move(n));
}

NodeId TypeStore::row_cons(Label l, NodeId payload, NodeId rest) {
  TypeNode n;
  n.tag = TypeNode::Tag::RowCons;
  n.label = std::move(l);
  n.a = payload;
  n.b = rest;
  return alloc(std::move(n));
}

NodeId TypeStore::row_of(const std::vector<std::pair<Label, NodeId>>& items, NodeId tail) {
  NodeId row = tail < 0 ? row_empty() : tail;
  for (auto it = items.rbegin(); it != items.rend(); ++it)
    row = row_cons(it->first, it->second, row);
  return row;
}

NodeId TypeStore::find(NodeId n) {
  NodeId root = n;
  while (nodes_[root].parent >= 0) root = nodes_[root].parent;
  while (nodes_[n].parent >= 0) {
    NodeId up = nodes_[n].parent;
    nodes_[n].parent = root;
    n = up;
  }
  return root;
}

void TypeStore::point_at(NodeId var, NodeId target) {
  NodeId v = find(var), t = find(target);
  if (v == t) return;
  if (nodes_[v].tag != TypeNode::Tag::Var)
    throw std::logic_error("point_at: representative is not a variable");
  if (nodes_[v].generic)
    throw CompileError(codes::unify, "cannot refine a quantified type variable", {});
  nodes_[v].parent = t;
}

void TypeStore::union_vars(NodeId a, NodeId b) {
  NodeId ra = find(a), rb = find(b);
  if (ra == rb) return;
  TypeNode& na = nodes_[ra];
  TypeNode& nb = nodes_[rb];
  assert(na.tag == TypeNode::Tag::Var && nb.tag == TypeNode::Tag::Var);
  assert(!na.generic && !nb.generic);
  Kind merged = na.kind;
  if (na.kind.is_row() && nb.kind.is_row())
    merged = Kind{Kind::Tag::Row, row_kind_intersect(na.kind.row, nb.kind.row)};
  if (na.rank < nb.rank) std::swap(ra, rb);
  if (nodes_[ra].rank == nodes_[rb].rank) nodes_[ra].rank++;
  nodes_[rb].parent = ra;
  nodes_[ra].kind = merged;
  if (nodes_[ra].name_hint.empty()) nodes_[ra].name_hint = nodes_[rb].name_hint;
}

RowView TypeStore::row_view(NodeId row, Span sp) {
  RowView v;
  std::set<NodeId> seen;
  NodeId cur = find(row);
  for (;;) {
    if (!seen.insert(cur).second)
      unify_fail("row variable occurs in its own tail", sp);
    const TypeNode& n = nodes_[cur];
    if (n.tag == TypeNode::Tag::RowEmpty) {
      v.tail = -1;
      return v;
    }
    if (n.tag == TypeNode::Tag::Var) {
      assert(n.kind.is_row());
      v.tail = cur;
      return v;
    }
    assert(n.tag == TypeNode::Tag::RowCons);
    for (const auto& [l, p] : v.items)
      if (l == n.label) kind_fail("label '" + n.label + "' occurs twice in a row", sp);
    v.items.emplace_back(n.label, n.a);
    cur = find(n.b);
  }
}

RowKind TypeStore::spine_kind(NodeId row, Span sp) {
  RowView v = row_view(row, sp);
  RowKind k = v.tail < 0 ? RowKind{false, {}} : nodes_[v.tail].kind.row;
  for (auto it = v.items.rbegin(); it != v.items.rend(); ++it) {
    auto ext = row_kind_extend(k, it->first);
    if (!ext) kind_fail("label '" + it->first + "' may occur twice in a row", sp);
    k = *ext;
  }
  return k;
}

void TypeStore::unify(NodeId x, NodeId y, Span sp) {
  std::set<std::pair<NodeId, NodeId>> seen;
  unify_inner(x, y, sp, seen);
}

void TypeStore::unify_inner(NodeId x, NodeId y, Span sp,
                            std::set<std::pair<NodeId, NodeId>>& seen) {
  x = find(x);
  y = find(y);
  if (x == y) return;
  if (!seen.insert({std::min(x, y), std::max(x, y)}).second) return;

  TypeNode& nx = nodes_[x];
  TypeNode& ny = nodes_[y];
  auto is_row_node = [&](const TypeNode& n) {
    return n.tag == TypeNode::Tag::RowEmpty || n.tag == TypeNode::Tag::RowCons ||
           (n.tag == TypeNode::Tag::Var && n.kind.is_row());
  };
  if (is_row_node(nx) || is_row_node(ny)) {
    if (!is_row_node(nx) || !is_row_node(ny))
      kind_fail("row used where an ordinary type is expected", sp);
    unify_rows(x, y, sp, seen);
    return;
  }

  if (nx.tag == TypeNode::Tag::Var && ny.tag == TypeNode::Tag::Var) {
    if (nx.generic || ny.generic) unify_fail("cannot refine a quantified type variable", sp);
    union_vars(x, y);
    return;
  }
  if (nx.tag == TypeNode::Tag::Var) {
    if (nx.generic) unify_fail("cannot refine a quantified type variable", sp);
    point_at(x, y);
    return;
  }
  if (ny.tag == TypeNode::Tag::Var) {
    if (ny.generic) unify_fail("cannot refine a quantified type variable", sp);
    point_at(y, x);
    return;
  }

  if (nx.tag != ny.tag) {
    auto show = [](const TypeNode& n) {
      switch (n.tag) {
        case TypeNode::Tag::Arrow: return "a function type";
        case TypeNode::Tag::Record: return "a record type";
        case TypeNode::Tag::Variant: return "a variant type";
        default: return "a type";
      }
    };
    unify_fail(std::string(show(nx)) + " cannot equal " + show(ny), sp);
  }

  // equate the constructors first so cyclic types converge
  NodeId a1 = nx.a, b1 = nx.b;
  NodeId a2 = ny.a, b2 = ny.b;
  nodes_[y].parent = x;
  switch (nx.tag) {
    case TypeNode::Tag::Arrow:
      unify_inner(a1, a2, sp, seen);
      unify_inner(b1, b2, sp, seen);
      break;
    case TypeNode::Tag::Record:
    case TypeNode::Tag::Variant:
      unify_rows(a1, a2, sp, seen);
      break;
    default:
      break;
  }
}

void TypeStore::unify_rows(NodeId x, NodeId y, Span sp,
                           std::set<std::pair<NodeId, NodeId>>& seen) {
  RowView va = row_view(x, sp);
  RowView vb = row_view(y, sp);

  std::vector<std::pair<NodeId, NodeId>> payload_pairs;
  std::vector<std::pair<Label, NodeId>> only_a, only_b;
  for (const auto& [l, p] : va.items) {
    auto it = std::find_if(vb.items.begin(), vb.items.end(),
                           [&](const auto& q) { return q.first == l; });
    if (it != vb.items.end())
      payload_pairs.emplace_back(p, it->second);
    else
      only_a.emplace_back(l, p);
  }
  for (const auto& [l, p] : vb.items) {
    auto it = std::find_if(va.items.begin(), va.items.end(),
                           [&](const auto& q) { return q.first == l; });
    if (it == va.items.end()) only_b.emplace_back(l, p);
  }

  auto absorb_check = [&](NodeId tail, const std::vector<std::pair<Label, NodeId>>& extra) {
    if (extra.empty()) return;
    if (tail < 0)
      unify_fail("row has no label '" + extra.front().first + "' and no tail to extend", sp);
    const RowKind& k = nodes_[tail].kind.row;
    for (const auto& [l, p] : extra)
      if (!row_kind_admits(k, l))
        kind_fail("label '" + l + "' cannot occur in a row of kind " + row_kind_to_string(k), sp);
    if (nodes_[tail].generic) unify_fail("cannot extend a quantified row variable", sp);
  };

  if (only_a.empty() && only_b.empty()) {
    if (va.tail < 0 && vb.tail < 0) {
      // both closed
    } else if (va.tail < 0 || vb.tail < 0) {
      NodeId v = va.tail < 0 ? vb.tail : va.tail;
      if (nodes_[v].generic) unify_fail("cannot close a quantified row variable", sp);
      point_at(v, row_empty());
    } else if (find(va.tail) != find(vb.tail)) {
      if (nodes_[va.tail].generic || nodes_[vb.tail].generic)
        unify_fail("cannot refine a quantified row variable", sp);
      union_vars(va.tail, vb.tail);
    }
  } else {
    absorb_check(va.tail, only_b);
    absorb_check(vb.tail, only_a);
    if (va.tail >= 0 && vb.tail >= 0 && find(va.tail) == find(vb.tail))
      unify_fail("row variable occurs on both sides with differing labels", sp);
    if ((va.tail >= 0 && nodes_[va.tail].generic) || (vb.tail >= 0 && nodes_[vb.tail].generic))
      unify_fail("cannot refine a quantified row variable", sp);

    auto minus_all = [](RowKind k, const std::vector<std::pair<Label, NodeId>>& ls) {
      for (const auto& [l, p] : ls) k = row_kind_minus(k, l);
      return k;
    };

    if (va.tail >= 0 && vb.tail >= 0) {
      RowKind k = row_kind_intersect(minus_all(nodes_[va.tail].kind.row, only_b),
                                     minus_all(nodes_[vb.tail].kind.row, only_a));
      NodeId rest = fresh_var(Kind{Kind::Tag::Row, k});
      NodeId for_a = row_of(only_b, rest);
      NodeId for_b = row_of(only_a, rest);
      point_at(va.tail, for_a);
      point_at(vb.tail, for_b);
    } else if (va.tail >= 0) {
      point_at(va.tail, row_of(only_b, -1));  // b is closed; only_a is empty here
    } else {
      point_at(vb.tail, row_of(only_a, -1));
    }
  }

  for (const auto& [p, q] : payload_pairs) unify_inner(p, q, sp, seen);
}

void TypeStore::audit_row_kinds() {
  for (const auto& [var, declared] : row_vars_) {
    NodeId rep = find(var);
    RowKind actual;
    if (nodes_[rep].tag == TypeNode::Tag::Var)
      actual = nodes_[rep].kind.row;
    else
      actual = spine_kind(rep, {});
    if (!row_kind_subset(actual, declared))
      throw std::logic_error("row kind audit failed: " + row_kind_to_string(actual) +
                             " is not within " + row_kind_to_string(declared));
  }
}

// ---------------------------------------------------------------------------
// schemes

Scheme mono_scheme(NodeId body) { return Scheme{{}, body}; }

const Scheme* TypeEnv::lookup(const std::string& name) const {
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it)
    if (it->first == name) return &it->second;
  return nullptr;
}

namespace {

void collect_vars(TypeStore& store, NodeId n, std::set<NodeId>& visited,
                  std::vector<NodeId>& order) {
  n = store.find(n);
  if (!visited.insert(n).second) return;
  const TypeNode& node = store.cnode(n);
  switch (node.tag) {
    case TypeNode::Tag::Var:
      if (!node.generic) order.push_back(n);
      return;
    case TypeNode::Tag::Arrow:
      collect_vars(store, node.a, visited, order);
      collect_vars(store, node.b, visited, order);
      return;
    case TypeNode::Tag::Record:
    case TypeNode::Tag::Variant:
      collect_vars(store, node.a, visited, order);
      return;
    case TypeNode::Tag::RowEmpty:
      return;
    case TypeNode::Tag::RowCons:
      collect_vars(store, node.a, visited, order);
      collect_vars(store, node.b, visited, order);
      return;
  }
}

}  // namespace

std::set<NodeId> free_type_vars(TypeStore& store, NodeId t) {
  std::set<NodeId> visited;
  std::vector<NodeId> order;
  collect_vars(store, t, visited, order);
  return std::set<NodeId>(order.begin(), order.end());
}

std::set<NodeId> free_type_vars(TypeStore& store, const TypeEnv& env) {
  std::set<NodeId> out;
  for (const auto& [name, scheme] : env.entries()) {
    auto vars = free_type_vars(store, scheme.body);
    out.insert(vars.begin(), vars.end());
  }
  return out;
}

std::vector<NodeId> generalizable_vars(TypeStore& store, NodeId t,
                                       const std::set<NodeId>& env_ftv) {
  std::set<NodeId> visited;
  std::vector<NodeId> order;
  collect_vars(store, t, visited, order);
  std::vector<NodeId> out;
  for (NodeId v : order)
    if (!env_ftv.count(v)) out.push_back(v);
  return out;
}

Scheme make_scheme(TypeStore& store, std::vector<NodeId> vars, NodeId body) {
  for (NodeId v : vars) store.node(store.find(v)).generic = true;
  return Scheme{std::move(vars), body};
}

Scheme generalize(TypeStore& store, const TypeEnv& env, NodeId t) {
  auto env_ftv = free_type_vars(store, env);
  return make_scheme(store, generalizable_vars(store, t, env_ftv), t);
}

NodeId instantiate(TypeStore& store, const Scheme& s) {
  std::set<NodeId> quantified;
  for (NodeId v : s.quantified) quantified.insert(store.find(v));
  std::map<NodeId, NodeId> memo;

  std::function<NodeId(NodeId)> copy = [&](NodeId n) -> NodeId {
    n = store.find(n);
    auto it = memo.find(n);
    if (it != memo.end()) return it->second;
    const TypeNode node = store.cnode(n);
    switch (node.tag) {
      case TypeNode::Tag::Var: {
        if (node.generic && quantified.count(n)) {
          NodeId fresh = store.fresh_var(node.kind, node.name_hint);
          memo[n] = fresh;
          return fresh;
        }
        memo[n] = n;
        return n;
      }
      case TypeNode::Tag::RowEmpty:
        memo[n] = n;
        return n;
      case TypeNode::Tag::Arrow: {
        NodeId fresh = store.arrow(-1, -1);
        memo[n] = fresh;
        store.node(fresh).a = copy(node.a);
        store.node(fresh).b = copy(node.b);
        return fresh;
      }
      case TypeNode::Tag::Record:
      case TypeNode::Tag::Variant: {
        NodeId fresh = node.tag == TypeNode::Tag::Record ? store.record(-1) : store.variant(-1);
        memo[n] = fresh;
        store.node(fresh).a = copy(node.a);
        return fresh;
      }
      case TypeNode::Tag::RowCons: {
        NodeId fresh = store.row_cons(node.label, -1, -1);
        memo[n] = fresh;
        store.node(fresh).a = copy(node.a);
        store.node(fresh).b = copy(node.b);
        return fresh;
      }
    }
    return n;
  };
  return copy(s.body);
}

// ---------------------------------------------------------------------------
// readback

namespace {

class Readback {
 public:
  explicit Readback(TypeStore& store) : store_(store) {}

  ReadbackResult run(NodeId t) {
    ReadbackResult out;
    out.type = go(t);
    out.row_kinds = row_kinds_;
    out.var_nodes = var_nodes_;
    return out;
  }

 private:
  TypeStore& store_;
  std::map<NodeId, std::string> names_;
  std::map<NodeId, std::string> binders_;
  std::set<NodeId> on_path_;
  std::map<std::string, RowKind> row_kinds_;
  std::map<std::string, NodeId> var_nodes_;
  int type_count_ = 0, row_count_ = 0, binder_count_ = 0;

  std::string number_name(const std::string& base_name, int i) {
    return i == 0 ? base_name : base_name + std::to_string(i);
  }

  std::string var_name(NodeId rep) {
    auto it = names_.find(rep);
    if (it != names_.end()) return it->second;
    const TypeNode& n = store_.cnode(rep);
    std::string name = n.kind.is_row() ? number_name("r", row_count_++)
                                       : number_name("p", type_count_++);
    names_[rep] = name;
    var_nodes_[name] = rep;
    if (n.kind.is_row()) row_kinds_[name] = n.kind.row;
    return name;
  }

  TypeExprPtr go(NodeId t) {
    NodeId n = store_.find(t);
    const TypeNode& node = store_.cnode(n);
    if (node.tag == TypeNode::Tag::Var) return ty_var(var_name(n));

    if (on_path_.count(n)) {
      auto it = binders_.find(n);
      if (it == binders_.end())
        it = binders_.emplace(n, number_name("t", binder_count_++)).first;
      return ty_var(it->second);
    }
    on_path_.insert(n);
    TypeExprPtr built;
    switch (node.tag) {
      case TypeNode::Tag::Arrow:
        built = ty_arrow(go(node.a), go(node.b));
        break;
      case TypeNode::Tag::Record:
      case TypeNode::Tag::Variant: {
        RowView v = store_.row_view(node.a, {});
        std::vector<std::pair<Label, TypeExprPtr>> row;
        for (const auto& [l, p] : v.items) row.emplace_back(l, go(p));
        RowTailKind tail = v.tail < 0 ? RowTailKind::Empty : RowTailKind::Var;
        std::string tv;
        std::optional<RowKind> tk;
        if (v.tail >= 0) {
          tv = var_name(v.tail);
          tk = store_.cnode(v.tail).kind.row;
        }
        built = node.tag == TypeNode::Tag::Record ? ty_record(std::move(row), tail, tv, tk)
                                                  : ty_variant(std::move(row), tail, tv, tk);
        break;
      }
      default:
        on_path_.erase(n);
        throw std::logic_error("readback reached a bare row node");
    }
    on_path_.erase(n);
    auto bind = binders_.find(n);
    if (bind != binders_.end()) built = ty_rec(bind->second, built);
    return built;
  }
};

}  // namespace

ReadbackResult readback(TypeStore& store, NodeId t) { return Readback(store).run(t); }

namespace {

void count_tail_vars(const TypeExprPtr& t, std::map<std::string, int>& counts) {
  if (!t) return;
  switch (t->kind) {
    case TypeExpr::Kind::Arrow:
      count_tail_vars(t->a, counts);
      count_tail_vars(t->b, counts);
      break;
    case TypeExpr::Kind::Record:
    case TypeExpr::Kind::Variant:
      for (const auto& [l, u] : t->row) count_tail_vars(u, counts);
      if (t->tail == RowTailKind::Var) counts[t->tail_var]++;
      break;
    case TypeExpr::Kind::Rec:
      count_tail_vars(t->a, counts);
      break;
    default:
      break;
  }
}

// Replace row tails that occur once and carry the default kind (excluding
// exactly the labels of their own row) with the omitted-tail form.
TypeExprPtr elide_default_tails(const TypeExprPtr& t, const std::map<std::string, int>& counts,
                                const std::map<std::string, RowKind>& kinds,
                                std::set<std::string>& elided) {
  if (!t) return t;
  switch (t->kind) {
    case TypeExpr::Kind::Arrow:
      return ty_arrow(elide_default_tails(t->a, counts, kinds, elided),
                      elide_default_tails(t->b, counts, kinds, elided), t->span);
    case TypeExpr::Kind::Rec:
      return ty_rec(t->var, elide_default_tails(t->a, counts, kinds, elided), t->span);
    case TypeExpr::Kind::Record:
    case TypeExpr::Kind::Variant: {
      std::vector<std::pair<Label, TypeExprPtr>> row;
      std::set<Label> present;
      for (const auto& [l, u] : t->row) {
        row.emplace_back(l, elide_default_tails(u, counts, kinds, elided));
        present.insert(l);
      }
      RowTailKind tail = t->tail;
      std::string tv = t->tail_var;
      if (t->tail == RowTailKind::Var) {
        auto kc = counts.find(tv);
        auto kk = kinds.find(tv);
        if (kc != counts.end() && kc->second == 1 && kk != kinds.end() &&
            kk->second == RowKind{true, present}) {
          tail = RowTailKind::Implicit;
          elided.insert(tv);
          tv.clear();
        }
      }
      return t->kind == TypeExpr::Kind::Record
                 ? ty_record(std::move(row), tail, tv, t->tail_kind, t->span)
                 : ty_variant(std::move(row), tail, tv, t->tail_kind, t->span);
    }
    default:
      return t;
  }
}

}  // namespace

PrintedScheme print_scheme(TypeStore& store, const Scheme& s) {
  auto rb = readback(store, s.body);
  std::map<std::string, int> counts;
  count_tail_vars(rb.type, counts);
  std::set<std::string> elided;
  auto shown = elide_default_tails(rb.type, counts, rb.row_kinds, elided);

  PrintedScheme out;
  out.body = pretty(shown);

  std::set<NodeId> quantified;
  for (NodeId v : s.quantified) quantified.insert(store.find(v));
  std::string legend;
  for (const auto& [name, rep] : rb.var_nodes) {
    if (!quantified.count(store.find(rep))) continue;
    const TypeNode& n = store.cnode(store.find(rep));
    out.kinds[name] = n.kind.to_string();
    if (n.kind.is_row() && !elided.count(name)) {
      if (!legend.empty()) legend += ", ";
      legend += name + ": " + row_kind_to_string(n.kind.row);
    }
  }
  out.rendered = out.body;
  if (!legend.empty()) out.rendered += "  where " + legend;
  return out;
}

// ---------------------------------------------------------------------------
// scheme comparison

namespace {

struct AlphaEq {
  TypeStore& sa;
  TypeStore& sb;
  std::set<NodeId> qa, qb;
  std::map<NodeId, NodeId> fwd, bwd;
  std::set<std::pair<NodeId, NodeId>> memo;

  bool vars_match(NodeId x, NodeId y) {
    const TypeNode& nx = sa.cnode(x);
    const TypeNode& ny = sb.cnode(y);
    if (!(nx.kind == ny.kind)) return false;
    if (qa.count(x) != qb.count(y)) return false;
    auto f = fwd.find(x);
    if (f != fwd.end()) return f->second == y;
    auto g = bwd.find(y);
    if (g != bwd.end()) return false;
    fwd[x] = y;
    bwd[y] = x;
    return true;
  }

  bool eq(NodeId x, NodeId y) {
    x = sa.find(x);
    y = sb.find(y);
    if (&sa == &sb && x == y) return true;
    if (!memo.insert({x, y}).second) return true;
    const TypeNode& nx = sa.cnode(x);
    const TypeNode& ny = sb.cnode(y);
    if (nx.tag == TypeNode::Tag::Var || ny.tag == TypeNode::Tag::Var) {
      if (nx.tag != ny.tag) return false;
      return vars_match(x, y);
    }
    if (nx.tag != ny.tag) return false;
    switch (nx.tag) {
      case TypeNode::Tag::Arrow:
        return eq(nx.a, ny.a) && eq(nx.b, ny.b);
      case TypeNode::Tag::Record:
      case TypeNode::Tag::Variant: {
        RowView va = sa.row_view(nx.a, {});
        RowView vb = sb.row_view(ny.a, {});
        if (va.items.size() != vb.items.size()) return false;
        for (const auto& [l, p] : va.items) {
          auto it = std::find_if(vb.items.begin(), vb.items.end(),
                                 [&](const auto& q) { return q.first == l; });
          if (it == vb.items.end() || !eq(p, it->second)) return false;
        }
        if ((va.tail < 0) != (vb.tail < 0)) return false;
        if (va.tail >= 0) return vars_match(sa.find(va.tail), sb.find(vb.tail));
        return true;
      }
      default:
        return false;
    }
  }
};

}  // namespace

bool scheme_equal_alpha(TypeStore& sa, const Scheme& a, TypeStore& sb, const Scheme& b) {
  AlphaEq cmp{sa, sb, {}, {}, {}, {}, {}};
  for (NodeId v : a.quantified) cmp.qa.insert(sa.find(v));
  for (NodeId v : b.quantified) cmp.qb.insert(sb.find(v));
  if (cmp.qa.size() != cmp.qb.size()) return false;
  return cmp.eq(a.body, b.body);
}

namespace {

// same-store structural equality with identity on variables
bool nodes_equal(TypeStore& s, NodeId x, NodeId y, std::set<std::pair<NodeId, NodeId>>& memo) {
  x = s.find(x);
  y = s.find(y);
  if (x == y) return true;
  if (!memo.insert({std::min(x, y), std::max(x, y)}).second) return true;
  const TypeNode& nx = s.cnode(x);
  const TypeNode& ny = s.cnode(y);
  if (nx.tag != ny.tag) return false;
  switch (nx.tag) {
    case TypeNode::Tag::Var:
      return false;  // distinct reps
    case TypeNode::Tag::Arrow:
      return nodes_equal(s, nx.a, ny.a, memo) && nodes_equal(s, nx.b, ny.b, memo);
    case TypeNode::Tag::Record:
    case TypeNode::Tag::Variant: {
      RowView va = s.row_view(nx.a, {});
      RowView vb = s.row_view(ny.a, {});
      if (va.items.size() != vb.items.size()) return false;
      for (const auto& [l, p] : va.items) {
        auto it = std::find_if(vb.items.begin(), vb.items.end(),
                               [&](const auto& q) { return q.first == l; });
        if (it == vb.items.end() || !nodes_equal(s, p, it->second, memo)) return false;
      }
      if ((va.tail < 0) != (vb.tail < 0)) return false;
      if (va.tail >= 0) return s.find(va.tail) == s.find(vb.tail);
      return true;
    }
    case TypeNode::Tag::RowEmpty:
      return true;
    case TypeNode::Tag::RowCons:
      return false;  // compared through views
  }
  return false;
}

struct InstanceMatch {
  TypeStore& store;
  std::set<NodeId> quantified;
  std::map<NodeId, NodeId> bound;
  std::set<std::pair<NodeId, NodeId>> memo;

  bool bind(NodeId q, NodeId target) {
    auto it = bound.find(q);
    if (it != bound.end()) {
      std::set<std::pair<NodeId, NodeId>> eqmemo;
      return nodes_equal(store, it->second, target, eqmemo);
    }
    bound[q] = target;
    return true;
  }

  bool mat(NodeId g, NodeId s) {
    g = store.find(g);
    s = store.find(s);
    if (g == s) return true;
    if (!memo.insert({g, s}).second) return true;
    const TypeNode& ng = store.cnode(g);
    if (ng.tag == TypeNode::Tag::Var) {
      if (!quantified.count(g)) return false;
      return bind(g, s);
    }
    const TypeNode& ns = store.cnode(s);
    if (ng.tag != ns.tag) return false;
    switch (ng.tag) {
      case TypeNode::Tag::Arrow:
        return mat(ng.a, ns.a) && mat(ng.b, ns.b);
      case TypeNode::Tag::Record:
      case TypeNode::Tag::Variant: {
        RowView vg = store.row_view(ng.a, {});
        RowView vs = store.row_view(ns.a, {});
        std::vector<std::pair<Label, NodeId>> s_only = vs.items;
        for (const auto& [l, p] : vg.items) {
          auto it = std::find_if(s_only.begin(), s_only.end(),
                                 [&](const auto& q) { return q.first == l; });
          if (it == s_only.end()) return false;  // the instance lacks a label
          if (!mat(p, it->second)) return false;
          s_only.erase(it);
        }
        if (s_only.empty() && ((vg.tail < 0) == (vs.tail < 0))) {
          if (vg.tail < 0) return true;
          NodeId tg = store.find(vg.tail), ts = store.find(vs.tail);
          if (tg == ts) return true;
          if (!quantified.count(tg)) return false;
          return bind(tg, ts);
        }
        // leftover labels (or a tail-shape difference) must be soaked up by a
        // quantified tail of the general side
        if (vg.tail < 0) return false;
        NodeId tg = store.find(vg.tail);
        if (!quantified.count(tg)) return false;
        return bind(tg, store.row_of(s_only, vs.tail));
      }
      default:
        return false;
    }
  }
};

}  // namespace

bool instance_of(TypeStore& store, const Scheme& general, NodeId specific) {
  InstanceMatch m{store, {}, {}, {}};
  for (NodeId v : general.quantified) m.quantified.insert(store.find(v));
  return m.mat(general.body, specific);
}

// ---------------------------------------------------------------------------
// annotation graphs

NodeId Inferencer::build_type(const TypeExprPtr& t, std::map<std::string, NodeId>& vars,
                              const KindingEnv& var_kinds) {
  switch (t->kind) {
    case TypeExpr::Kind::Var: {
      auto it = vars.find(t->var);
      if (it != vars.end()) return it->second;
      Kind k = Kind::type();
      auto kit = var_kinds.find(t->var);
      if (kit != var_kinds.end()) k = kit->second;
      NodeId v = store_.fresh_var(k, t->var);
      vars[t->var] = v;
      return v;
    }
    case TypeExpr::Kind::Arrow:
      return store_.arrow(build_type(t->a, vars, var_kinds), build_type(t->b, vars, var_kinds));
    case TypeExpr::Kind::Record:
    case TypeExpr::Kind::Variant: {
      std::vector<std::pair<Label, NodeId>> items;
      std::set<Label> present;
      for (const auto& [l, u] : t->row) {
        items.emplace_back(l, build_type(u, vars, var_kinds));
        present.insert(l);
      }
      NodeId tail = -1;
      if (t->tail == RowTailKind::Var) {
        auto it = vars.find(t->tail_var);
        if (it != vars.end()) {
          tail = it->second;
        } else {
          Kind k{Kind::Tag::Row, RowKind{true, present}};
          auto kit = var_kinds.find(t->tail_var);
          if (kit != var_kinds.end()) k = kit->second;
          tail = store_.fresh_var(k, t->tail_var);
          vars[t->tail_var] = tail;
        }
      } else if (t->tail == RowTailKind::Implicit) {
        // compatibility variables: free to merge or solve, unlike named ones
        tail = store_.fresh_var(Kind{Kind::Tag::Row, RowKind{true, present}});
      }
      NodeId row = store_.row_of(items, tail);
      return t->kind == TypeExpr::Kind::Record ? store_.record(row) : store_.variant(row);
    }
    case TypeExpr::Kind::Rec: {
      NodeId binder = store_.fresh_var(Kind::type(), t->var);
      auto saved = vars.find(t->var) != vars.end() ? std::optional<NodeId>(vars[t->var])
                                                   : std::nullopt;
      vars[t->var] = binder;
      NodeId body = build_type(t->a, vars, var_kinds);
      if (saved)
        vars[t->var] = *saved;
      else
        vars.erase(t->var);
      store_.unify(binder, body, t->span);
      return store_.find(body);
    }
    case TypeExpr::Kind::Alias:
      kind_fail("unresolved type alias '" + t->alias + "'", t->span);
  }
  return -1;
}

// ---------------------------------------------------------------------------
// inference

InferOutcome Inferencer::infer(const TermPtr& e, std::optional<NodeId> expected) {
  InferOutcome out;
  bool consumed = false;
  switch (e->kind) {
    case Term::Kind::Var: {
      const Scheme* s = env_.lookup(e->var);
      if (!s) throw CompileError(codes::unbound, "unbound variable '" + e->var + "'", e->span);
      out.type = instantiate(store_, *s);
      out.term = e;
      break;
    }
    case Term::Kind::App: {
      auto f = infer(e->a);
      auto x = infer(e->b);
      NodeId result = store_.fresh_var(Kind::type());
      store_.unify(f.type, store_.arrow(x.type, result), e->span);
      out.type = result;
      out.term = mk_app(f.term, x.term, e->span);
      break;
    }
    case Term::Kind::Lam: {
      NodeId param = store_.fresh_var(Kind::type());
      std::optional<NodeId> body_expected;
      if (expected) {
        NodeId res = store_.fresh_var(Kind::type());
        store_.unify(*expected, store_.arrow(param, res), e->span);
        body_expected = res;
        consumed = true;
      }
      env_.push(e->var, mono_scheme(param));
      auto body = infer(e->a, body_expected);
      env_.pop();
      out.type = store_.arrow(param, body.type);
      out.term = mk_lam(e->var, body.term, e->span);
      break;
    }
    case Term::Kind::Let: {
      auto value = infer(e->a);
      Scheme s = generalize(store_, env_, value.type);
      env_.push(e->var, s);
      auto body = infer(e->b, expected);
      env_.pop();
      consumed = true;
      out.type = body.type;
      out.term = mk_let(e->var, value.term, body.term, e->span);
      break;
    }
    case Term::Kind::Fix: {
      NodeId t1 = store_.fresh_var(Kind::type());
      NodeId t2 = store_.fresh_var(Kind::type());
      NodeId f = store_.arrow(t1, t2);
      out.type = store_.arrow(store_.arrow(f, f), f);
      out.term = e;
      break;
    }
    case Term::Kind::LabelApp: {
      auto payload = infer(e->a);
      NodeId rest = store_.fresh_var(Kind::row_neg({e->label}));
      out.type = store_.variant(store_.row_cons(e->label, payload.type, rest));
      out.term = mk_label(e->label, payload.term, e->span);
      break;
    }
    case Term::Kind::Record: {
      std::vector<std::pair<Label, NodeId>> items;
      std::vector<std::pair<Label, TermPtr>> fields;
      for (const auto& [l, sub] : e->fields) {
        auto v = infer(sub);
        items.emplace_back(l, v.type);
        fields.emplace_back(l, v.term);
      }
      out.type = store_.record(store_.row_of(items, -1));
      out.term = mk_record(std::move(fields), e->span);
      break;
    }
    case Term::Kind::FieldAccess: {
      auto subject = infer(e->a);
      NodeId payload = store_.fresh_var(Kind::type());
      NodeId rest = store_.fresh_var(Kind::row_neg({e->label}));
      store_.unify(subject.type, store_.record(store_.row_cons(e->label, payload, rest)), e->span);
      out.type = payload;
      out.term = mk_field_access(subject.term, e->label, e->span);
      break;
    }
    case Term::Kind::FieldRemove: {
      auto subject = infer(e->a);
      NodeId payload = store_.fresh_var(Kind::type());
      NodeId rest = store_.fresh_var(Kind::row_neg({e->label}));
      store_.unify(subject.type, store_.record(store_.row_cons(e->label, payload, rest)), e->span);
      out.type = store_.record(rest);
      out.term = mk_field_remove(subject.term, e->label, e->span);
      break;
    }
    case Term::Kind::RecordMod: {
      auto subject = infer(e->a);
      std::set<Label> labels;
      for (const auto& [l, sub] : e->fields) labels.insert(l);
      NodeId rest = store_.fresh_var(Kind::row_neg(labels));
      std::vector<std::pair<Label, NodeId>> items;
      std::vector<std::pair<Label, TermPtr>> fields;
      for (const auto& [l, sub] : e->fields)
        items.emplace_back(l, store_.fresh_var(Kind::type()));
      store_.unify(subject.type, store_.record(store_.row_of(items, rest)), e->span);
      for (size_t i = 0; i < e->fields.size(); ++i) {
        auto v = infer(e->fields[i].second);
        store_.unify(v.type, items[i].second, e->fields[i].second->span);
        fields.emplace_back(e->fields[i].first, v.term);
      }
      out.type = subject.type;
      out.term = mk_record_mod(subject.term, std::move(fields), e->span);
      break;
    }
    case Term::Kind::RecordExt: {
      auto subject = infer(e->a);
      std::set<Label> labels;
      for (const auto& [l, sub] : e->fields) labels.insert(l);
      NodeId rest = store_.fresh_var(Kind::row_neg(labels));
      store_.unify(subject.type, store_.record(rest), e->span);
      std::vector<std::pair<Label, NodeId>> items;
      std::vector<std::pair<Label, TermPtr>> fields;
      for (const auto& [l, sub] : e->fields) {
        auto v = infer(sub);
        items.emplace_back(l, v.type);
        fields.emplace_back(l, v.term);
      }
      out.type = store_.record(store_.row_of(items, rest));
      out.term = mk_record_ext(subject.term, std::move(fields), e->span);
      break;
    }
    case Term::Kind::Match: {
      out = infer_match(e);
      break;
    }
  }
  if (expected && !consumed) store_.unify(out.type, *expected, e->span);
  return out;
}

InferOutcome Inferencer::infer_match(const TermPtr& e) {
  auto subject = infer(e->a);
  InferOutcome out;

  if (e->branches.empty()) {
    store_.unify(subject.type, store_.variant(store_.row_empty()), e->span);
    out.type = store_.fresh_var(Kind::type());
    out.term = mk_match(subject.term, {}, e->span);
    return out;
  }

  if (e->branches.size() == 1) {
    const auto& br = e->branches[0];
    if (br.pattern->kind != Pattern::Kind::Record || !br.pattern->fields.empty())
      throw CompileError(codes::unify, "match is not in core form", e->span);
    store_.unify(subject.type, store_.record(store_.row_empty()), e->span);
    auto rhs = infer(br.rhs);
    out.type = rhs.type;
    out.term = mk_match(subject.term, {Branch{br.pattern, rhs.term}}, e->span);
    return out;
  }

  const auto& lb = e->branches[0];
  const auto& vb = e->branches[1];
  if (e->branches.size() != 2 || lb.pattern->kind != Pattern::Kind::Lab || !lb.pattern->payload ||
      lb.pattern->payload->kind != Pattern::Kind::Var || vb.pattern->kind != Pattern::Kind::Var)
    throw CompileError(codes::unify, "match is not in core form", e->span);

  const Label& l = lb.pattern->label;
  const std::string& x1 = lb.pattern->payload->var;
  const std::string& x2 = vb.pattern->var;

  auto env_ftv = free_type_vars(store_, env_);

  // Dead-branch analysis: the branch label must be able to occur in the
  // subject's row.
  bool dead = false;
  if (!declarative_) {
    NodeId st = store_.find(subject.type);
    if (store_.cnode(st).tag == TypeNode::Tag::Variant) {
      RowView view = store_.row_view(store_.cnode(st).a, e->span);
      bool present = std::any_of(view.items.begin(), view.items.end(),
                                 [&](const auto& it) { return it.first == l; });
      if (!present) {
        if (view.tail < 0)
          dead = true;  // the row is closed without l
        else if (!row_kind_admits(store_.cnode(view.tail).kind.row, l))
          dead = true;  // the row kind excludes l
        else if (!env_ftv.count(store_.find(view.tail)))
          dead = true;  // compatibility-only row variable
      }
    }
  }

  auto pin_compat_tail = [&](NodeId row) {
    if (declarative_) return;
    RowView view = store_.row_view(row, e->span);
    if (view.tail < 0 || store_.cnode(view.tail).generic) return;
    auto ftv_now = free_type_vars(store_, env_);
    if (!ftv_now.count(store_.find(view.tail)))
      store_.unify(view.tail, store_.row_empty(), e->span);
  };

  if (dead) {
    Span where = e->span;
    auto tags = count_rhs_tags(lb.rhs);
    if (ledger_) {
      std::vector<std::string> gone;
      for (const auto& [id, n] : tags) {
        if (!ledger_->tracked(id)) continue;
        ledger_->add(id, -n);
        if (ledger_->counts.at(id) <= 0) {
          where = ledger_->spans.at(id);
          gone.push_back("branch " + std::to_string(ledger_->branch_index.at(id)) + " at " +
                         ledger_->spans.at(id).to_string());
        }
      }
      if (!gone.empty())
        throw CompileError(codes::redundant,
                           "redundant patterns: a dead branch removed the last occurrence",
                           where, gone);
    }
    Diagnostic warn;
    warn.severity = Severity::Warning;
    warn.code = codes::dead_branch;
    warn.message = "branch for label '" + l + "' can never be reached and was removed";
    warn.span = where.known() ? where : e->span;
    warnings_.push_back(warn);

    NodeId st = store_.find(subject.type);
    pin_compat_tail(store_.cnode(st).a);
    auto env_ftv2 = free_type_vars(store_, env_);
    Scheme sx2 = make_scheme(store_, generalizable_vars(store_, subject.type, env_ftv2),
                             subject.type);
    env_.push(x2, sx2);
    auto rhs2 = infer(vb.rhs);
    env_.pop();
    out.type = rhs2.type;
    out.term = mk_let(x2, subject.term, rhs2.term, e->span);
    return out;
  }

  NodeId payload = store_.fresh_var(Kind::type());
  NodeId rest = store_.fresh_var(Kind::row_neg({l}));
  store_.unify(subject.type, store_.variant(store_.row_cons(l, payload, rest)), e->span);

  pin_compat_tail(rest);

  NodeId remainder = store_.variant(rest);
  auto env_ftv2 = free_type_vars(store_, env_);
  auto vars1 = generalizable_vars(store_, payload, env_ftv2);
  auto vars2 = generalizable_vars(store_, remainder, env_ftv2);
  Scheme sx1 = make_scheme(store_, vars1, payload);
  Scheme sx2 = make_scheme(store_, vars2, remainder);

  env_.push(x1, sx1);
  auto rhs1 = infer(lb.rhs);
  env_.pop();
  env_.push(x2, sx2);
  auto rhs2 = infer(vb.rhs);
  env_.pop();
  store_.unify(rhs1.type, rhs2.type, e->span);

  out.type = rhs1.type;
  out.term = mk_match(subject.term,
                      {Branch{lb.pattern, rhs1.term}, Branch{vb.pattern, rhs2.term}}, e->span);
  return out;
}

}  // namespace elevate
