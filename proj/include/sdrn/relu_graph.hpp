#ifndef SDRN_RELU_GRAPH_HPP
#define SDRN_RELU_GRAPH_HPP

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sdrn/error.hpp"
#include "sdrn/relu_product.hpp"
#include "sdrn/sparse_grid.hpp"

namespace sdrn {

/// Reference to a value in the graph. Layer 0 is the input layer; layer k >= 1
/// is the k-th computation layer.
struct NodeRef {
  std::size_t layer = 0;
  std::size_t node = 0;
  friend auto operator<=>(const NodeRef&, const NodeRef&) = default;
};

struct Connection {
  NodeRef source;
  double weight = 0.0;
};

/// z = act(sum_j w_j * source_j + bias), act = ReLU or identity.
struct Unit {
  std::vector<Connection> inputs;
  double bias = 0.0;
  bool relu = true;
};

struct ComplexityReport {
  std::size_t depth = 0;
  std::size_t units = 0;
  std::size_t weights = 0;
  friend bool operator==(const ComplexityReport&, const ComplexityReport&) = default;
};

/// Layered ReLU network with skip connections to any earlier layer; the last
/// layer holds the outputs.
///
/// Counting convention: depth is the number of layers including the input
/// layer, units are all computation nodes (hidden and output), and weights
/// are nonzero connections plus units.
class ReluGraph {
 public:
  explicit ReluGraph(std::size_t input_arity = 0) : input_arity_(input_arity) {}

  std::size_t input_arity() const noexcept { return input_arity_; }
  const std::vector<std::vector<Unit>>& layers() const noexcept { return layers_; }

  /// Appends `unit` to computation layer `layer` (1-based), creating layers as needed.
  NodeRef add_unit(std::size_t layer, Unit unit) {
    if (layer == 0) throw DomainError("ReluGraph: computation layers start at 1");
    for (const auto& c : unit.inputs)
      if (c.source.layer >= layer) throw DomainError("ReluGraph: connections must point to earlier layers");
    if (layers_.size() < layer) layers_.resize(layer);
    layers_[layer - 1].push_back(std::move(unit));
    return {layer, layers_[layer - 1].size() - 1};
  }

  ComplexityReport complexity() const {
    ComplexityReport r;
    r.depth = layers_.size() + 1;
    std::size_t connections = 0;
    for (const auto& layer : layers_) {
      r.units += layer.size();
      for (const auto& u : layer)
        for (const auto& c : u.inputs)
          if (c.weight != 0.0) ++connections;
    }
    r.weights = connections + r.units;
    return r;
  }

  std::vector<double> evaluate(std::span<const double> input) const {
    if (input.size() != input_arity_)
      throw DimensionMismatch("ReluGraph: expected " + std::to_string(input_arity_) + " inputs, got " +
                              std::to_string(input.size()));
    std::vector<std::vector<double>> values(layers_.size() + 1);
    values[0].assign(input.begin(), input.end());
    for (std::size_t k = 0; k < layers_.size(); ++k) {
      auto& out = values[k + 1];
      out.reserve(layers_[k].size());
      for (const auto& u : layers_[k]) {
        double z = u.bias;
        for (const auto& c : u.inputs) z += c.weight * values[c.source.layer][c.source.node];
        out.push_back(u.relu ? relu(z) : z);
      }
    }
    return values.back();
  }

  double evaluate_scalar(std::span<const double> input) const { return evaluate(input).at(0); }

  /// Layer-list JSON document. See README "ReLU graph JSON".
  nlohmann::json to_json() const {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& layer : layers_) {
      nlohmann::json jl = nlohmann::json::array();
      for (const auto& u : layer) {
        nlohmann::json inputs = nlohmann::json::array();
        for (const auto& c : u.inputs) inputs.push_back({c.source.layer, c.source.node, c.weight});
        jl.push_back({{"bias", u.bias}, {"relu", u.relu}, {"inputs", std::move(inputs)}});
      }
      layers.push_back(std::move(jl));
    }
    const auto cx = complexity();
    return {{"input_arity", input_arity_},
            {"depth", cx.depth},
            {"units", cx.units},
            {"weights", cx.weights},
            {"layers", std::move(layers)}};
  }

  static ReluGraph from_json(const nlohmann::json& j) {
    ReluGraph g(j.at("input_arity").get<std::size_t>());
    std::size_t k = 0;
    for (const auto& jl : j.at("layers")) {
      ++k;
      g.layers_.resize(k);
      for (const auto& ju : jl) {
        Unit u;
        u.bias = ju.at("bias").get<double>();
        u.relu = ju.at("relu").get<bool>();
        for (const auto& jc : ju.at("inputs"))
          u.inputs.push_back({{jc.at(0).get<std::size_t>(), jc.at(1).get<std::size_t>()}, jc.at(2).get<double>()});
        g.layers_[k - 1].push_back(std::move(u));
      }
    }
    return g;
  }

 private:
  std::size_t input_arity_;
  std::vector<std::vector<Unit>> layers_;
};

/// Affine combination of already-built graph values, merged per source.
struct LinearExpr {
  std::map<NodeRef, double> terms;
  double constant = 0.0;

  static LinearExpr of(NodeRef ref, double w = 1.0) {
    LinearExpr e;
    e.terms[ref] = w;
    return e;
  }
  LinearExpr& add(const LinearExpr& other, double scale) {
    for (const auto& [ref, w] : other.terms) terms[ref] += scale * w;
    constant += scale * other.constant;
    return *this;
  }
  /// Unit computing act(this + shift).
  Unit as_unit(double shift, bool relu_active) const {
    Unit u;
    for (const auto& [ref, w] : terms)
      if (w != 0.0) u.inputs.push_back({ref, w});
    u.bias = constant + shift;
    u.relu = relu_active;
    return u;
  }
};

namespace detail {

// Places the R tooth layers of f_R(u) in layers start .. start+R-1 and returns
// f_R(u) = u - sum_r g_r(u)/4^r as an expression over those units (and u).
inline LinearExpr square_block(ReluGraph& g, const LinearExpr& u, std::size_t start, std::uint32_t R) {
  LinearExpr result = u;
  LinearExpr prev = u;  // g_0 = u
  double scale = 1.0;
  for (std::uint32_t r = 1; r <= R; ++r) {
    const std::size_t layer = start + r - 1;
    const NodeRef a = g.add_unit(layer, prev.as_unit(0.0, true));
    const NodeRef b = g.add_unit(layer, prev.as_unit(-0.5, true));
    const NodeRef c = g.add_unit(layer, prev.as_unit(-1.0, true));
    LinearExpr gr;  // g_r = 2 a - 4 b + 2 c
    gr.terms[a] = 2.0;
    gr.terms[b] = -4.0;
    gr.terms[c] = 2.0;
    scale *= 0.25;
    result.add(gr, -scale);
    prev = std::move(gr);
  }
  return result;
}

inline LinearExpr pair_block(ReluGraph& g, const LinearExpr& x, const LinearExpr& y, std::size_t start,
                             std::uint32_t R) {
  LinearExpr mean;
  mean.add(x, 0.5).add(y, 0.5);
  const LinearExpr fm = square_block(g, mean, start, R);
  const LinearExpr fx = square_block(g, x, start, R);
  const LinearExpr fy = square_block(g, y, start, R);
  LinearExpr out;
  out.add(fm, 2.0).add(fx, -0.5).add(fy, -0.5);
  return out;
}

inline void check_accuracy_level(std::uint32_t R) {
  if (R == 0) throw DomainError("ReLU product networks require R >= 1");
}

}  // namespace detail

/// Network for f_R(x): depth R+2, 3R+1 units, 15R-4 weights.
inline ReluGraph build_square_network(std::uint32_t R) {
  detail::check_accuracy_level(R);
  ReluGraph g(1);
  const LinearExpr out = detail::square_block(g, LinearExpr::of({0, 0}), 1, R);
  g.add_unit(R + 1, out.as_unit(0.0, false));
  return g;
}

/// Network for f~_R(x, y).
inline ReluGraph build_pair_network(std::uint32_t R) {
  detail::check_accuracy_level(R);
  ReluGraph g(2);
  const LinearExpr out = detail::pair_block(g, LinearExpr::of({0, 0}), LinearExpr::of({0, 1}), 1, R);
  g.add_unit(R + 1, out.as_unit(0.0, false));
  return g;
}

/// Network for f~ applied as a binary tree to q inputs in [0, 1]; mirrors
/// tree_product (internal outputs clamped via relu(v) - relu(v - 1)).
namespace detail {

inline ReluGraph tree_network(ReluGraph g, std::vector<LinearExpr> values, std::size_t start, std::uint32_t R) {
  while (values.size() > 1) {
    const bool final_level = values.size() == 2;
    std::vector<LinearExpr> next;
    for (std::size_t k = 0; k + 1 < values.size(); k += 2) {
      LinearExpr v = pair_block(g, values[k], values[k + 1], start, R);
      if (!final_level) {
        const NodeRef lo = g.add_unit(start + R, v.as_unit(0.0, true));
        const NodeRef hi = g.add_unit(start + R, v.as_unit(-1.0, true));
        LinearExpr clamped;
        clamped.terms[lo] = 1.0;
        clamped.terms[hi] = -1.0;
        v = std::move(clamped);
      }
      next.push_back(std::move(v));
    }
    if (values.size() % 2 == 1) next.push_back(values.back());  // forwarded by a skip connection
    values = std::move(next);
    start += final_level ? R : R + 1;
  }
  g.add_unit(start, values.front().as_unit(0.0, false));
  return g;
}

}  // namespace detail

inline ReluGraph build_tree_network(std::uint32_t R, std::size_t q) {
  detail::check_accuracy_level(R);
  if (q == 0) throw DomainError("build_tree_network: need at least one factor");
  ReluGraph g(q);
  std::vector<LinearExpr> values;
  for (std::size_t j = 0; j < q; ++j) values.push_back(LinearExpr::of({0, j}));
  return detail::tree_network(std::move(g), std::move(values), 1, R);
}

/// Network for phi~_{l,s}(x): one hat layer (3 units per coordinate,
/// phi(t) = relu(t+1) - 2 relu(t) + relu(t-1)) followed by the product tree.
inline ReluGraph build_basis_network(std::uint32_t R, const BasisId& id) {
  detail::check_accuracy_level(R);
  if (!id.valid()) throw DomainError("build_basis_network: invalid basis id");
  const std::size_t d = id.dimension();
  ReluGraph g(d);
  std::vector<LinearExpr> hats;
  for (std::size_t j = 0; j < d; ++j) {
    const double scale = std::ldexp(1.0, static_cast<int>(id.level.levels[j]));
    const LinearExpr t = [&] {
      LinearExpr e = LinearExpr::of({0, j}, scale);
      e.constant = -static_cast<double>(id.node[j]);
      return e;
    }();
    const NodeRef a = g.add_unit(1, t.as_unit(1.0, true));
    const NodeRef b = g.add_unit(1, t.as_unit(0.0, true));
    const NodeRef c = g.add_unit(1, t.as_unit(-1.0, true));
    LinearExpr hat;
    hat.terms[a] = 1.0;
    hat.terms[b] = -2.0;
    hat.terms[c] = 1.0;
    hats.push_back(std::move(hat));
  }
  return detail::tree_network(std::move(g), std::move(hats), 2, R);
}

/// Complexity of the whole approximator: `basis_count` basis networks in
/// parallel feeding one linear output unit.
inline ComplexityReport sdrn_network_complexity(std::uint32_t R, std::size_t d, std::size_t basis_count) {
  BasisId probe{LevelVector{std::vector<std::uint32_t>(d, 0)}, std::vector<std::uint32_t>(d, 0)};
  const auto one = build_basis_network(R, probe).complexity();
  ComplexityReport total;
  total.depth = one.depth + 1;
  total.units = one.units * basis_count + 1;
  total.weights = one.weights * basis_count + basis_count + 1;
  return total;
}

}  // namespace sdrn

#endif  // SDRN_RELU_GRAPH_HPP
