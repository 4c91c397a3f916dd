#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "polyreach/model.hpp"

namespace polyreach {

// Labelled directed multigraph whose walks are the admissible switching
// words: edge labels name the mode active during that step.
struct AttackGraph {
  std::vector<std::string> nodes;
  struct Edge {
    std::string src, dst, label;
  };
  std::vector<Edge> edges;
};

inline void validate(const AttackGraph& G) {
  std::set<std::string> nodes(G.nodes.begin(), G.nodes.end());
  if (nodes.size() != G.nodes.size()) throw Error("attack graph: duplicate node id");
  std::set<std::string> with_out;
  std::set<std::string> triples;
  for (const auto& e : G.edges) {
    if (!nodes.count(e.src) || !nodes.count(e.dst))
      throw Error("attack graph: edge endpoint not a node");
    if (e.label.empty()) throw Error("attack graph: empty edge label");
    if (!triples.insert(e.src + "\x1f" + e.dst + "\x1f" + e.label).second)
      throw Error("attack graph: duplicate edge");
    with_out.insert(e.src);
  }
  for (const auto& n : G.nodes)
    if (!with_out.count(n)) throw Error("attack graph: node '" + n + "' has no outgoing edge");
}

// Graph of all words whose attack runs last at most n_max steps and whose
// consecutive attack runs are separated by at least n_min quiet steps.
// Layout: idle node "s", attack counters "a1..a{n_max}", forced recovery
// chain "r1..r{n_min-1}" (empty when n_min = 1, which folds recovery into
// "s").  Node count n_max + n_min, edge count 2 n_max + n_min.
inline AttackGraph build_dwell_graph(int n_max, int n_min) {
  if (n_max < 0 || n_min < 1) throw InvalidDwell("build_dwell_graph: need n_max >= 0, n_min >= 1");
  AttackGraph G;
  G.nodes.push_back("s");
  if (n_max == 0) {
    G.edges.push_back({"s", "s", "N"});
    return G;
  }
  for (int k = 1; k <= n_max; ++k) G.nodes.push_back("a" + std::to_string(k));
  for (int j = 1; j <= n_min - 1; ++j) G.nodes.push_back("r" + std::to_string(j));
  const std::string recover = n_min == 1 ? "s" : "r1";
  G.edges.push_back({"s", "s", "N"});
  G.edges.push_back({"s", "a1", "A"});
  for (int k = 1; k <= n_max; ++k) {
    if (k < n_max)
      G.edges.push_back({"a" + std::to_string(k), "a" + std::to_string(k + 1), "A"});
    G.edges.push_back({"a" + std::to_string(k), recover, "N"});
  }
  for (int j = 1; j <= n_min - 1; ++j) {
    const std::string next = j == n_min - 1 ? "s" : "r" + std::to_string(j + 1);
    G.edges.push_back({"r" + std::to_string(j), next, "N"});
  }
  return G;
}

// Synchronous product: walks of the product are exactly the pairs of walks
// of the factors, with component labels joined by '.'.
inline AttackGraph kron_product(const AttackGraph& A, const AttackGraph& B) {
  AttackGraph P;
  for (const auto& a : A.nodes)
    for (const auto& b : B.nodes) P.nodes.push_back(a + "." + b);
  for (const auto& ea : A.edges)
    for (const auto& eb : B.edges)
      P.edges.push_back(
          {ea.src + "." + eb.src, ea.dst + "." + eb.dst, ea.label + "." + eb.label});
  return P;
}

struct Word {
  std::vector<std::string> path;    // len+1 node ids
  std::vector<std::string> labels;  // len edge labels
};

// All walks of exactly `len` edges, from every start node, in deterministic
// node/edge order.  Exponential; diagnostics and tests only.
inline std::vector<Word> enumerate_words(const AttackGraph& G, int len) {
  std::vector<Word> out;
  std::vector<std::vector<const AttackGraph::Edge*>> by_src(G.nodes.size());
  std::map<std::string, int> idx;
  for (size_t i = 0; i < G.nodes.size(); ++i) idx[G.nodes[i]] = static_cast<int>(i);
  for (const auto& e : G.edges) by_src[idx.at(e.src)].push_back(&e);

  Word cur;
  std::function<void(int, int)> rec = [&](int node, int remaining) {
    if (remaining == 0) {
      out.push_back(cur);
      return;
    }
    for (const auto* e : by_src[node]) {
      cur.path.push_back(e->dst);
      cur.labels.push_back(e->label);
      rec(idx.at(e->dst), remaining - 1);
      cur.path.pop_back();
      cur.labels.pop_back();
    }
  };
  for (size_t s = 0; s < G.nodes.size(); ++s) {
    cur.path = {G.nodes[s]};
    cur.labels.clear();
    rec(static_cast<int>(s), len);
  }
  return out;
}

// One attacked channel and the word language over it.  Labels other than
// "N" mean the channel is under attack during that step.
struct ChannelPattern {
  enum class Kind { Sensor, Actuator };
  Kind kind = Kind::Sensor;
  int index = 1;
  AttackGraph pattern;
};

// Product pattern with composite labels resolved to dense mode ids; the
// all-quiet composite is always mode 1.
struct ModeTable {
  AttackGraph graph;                          // labels are composite strings
  std::vector<ChannelSelection> selections;   // selections[id-1]
  std::map<std::string, int> label_to_mode;
};

inline ModeTable compose_modes(const std::vector<ChannelPattern>& channels) {
  if (channels.empty()) throw Error("compose_modes: no channels");
  ModeTable t;
  t.graph = channels[0].pattern;
  for (size_t i = 1; i < channels.size(); ++i)
    t.graph = kron_product(t.graph, channels[i].pattern);
  validate(t.graph);

  auto split = [&](const std::string& composite) {
    std::vector<std::string> parts;
    std::string cur;
    for (char ch : composite) {
      if (ch == '.') {
        parts.push_back(cur);
        cur.clear();
      } else {
        cur += ch;
      }
    }
    parts.push_back(cur);
    return parts;
  };

  std::string nominal;
  for (size_t i = 0; i < channels.size(); ++i) nominal += (i ? ".N" : "N");

  std::set<std::string> labels;
  for (const auto& e : t.graph.edges) labels.insert(e.label);
  std::vector<std::string> order;
  if (labels.count(nominal)) order.push_back(nominal);
  for (const auto& l : labels)
    if (l != nominal) order.push_back(l);

  for (size_t k = 0; k < order.size(); ++k) {
    const auto parts = split(order[k]);
    if (parts.size() != channels.size())
      throw Error("compose_modes: composite label arity mismatch");
    ChannelSelection sel;
    for (size_t c = 0; c < channels.size(); ++c) {
      if (parts[c] == "N") continue;
      if (channels[c].kind == ChannelPattern::Kind::Sensor)
        sel.outputs.push_back(channels[c].index);
      else
        sel.inputs.push_back(channels[c].index);
    }
    std::sort(sel.inputs.begin(), sel.inputs.end());
    std::sort(sel.outputs.begin(), sel.outputs.end());
    t.label_to_mode[order[k]] = static_cast<int>(k) + 1;
    t.selections.push_back(sel);
  }
  return t;
}

}  // namespace polyreach
