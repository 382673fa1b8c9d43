// Copyright 2026 The xling Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "xling/errors.hpp"
#include "xling/tensor.hpp"

namespace xling {

class Graph;

// Handle to a node in a Graph. Cheap to copy; valid for the graph's lifetime.
struct Value {
  Graph* g = nullptr;
  int id = -1;
};

// Reverse-mode tape. Nodes are appended in construction order (which is a
// topological order by construction); backward() walks them exactly once in
// reverse. The tape is rebuilt from scratch every optimization step.
//
// Leaves reference external parameter tensors without copying their values;
// their gradients are accumulated locally during backward and flushed into
// the external tensor at the end, so a graph never mutates parameters while
// it is still traversing them.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // ---- node creation ----

  // Registers an external tensor (parameter or fixed input). Memoized per
  // tensor address so each parameter appears once per graph.
  Value leaf(Tensor& t) {
    auto it = leaf_ids_.find(&t);
    if (it != leaf_ids_.end()) return {this, it->second};
    Node n;
    n.kind = Op::kLeaf;
    n.external = &t;
    n.out.shape = t.shape;
    n.out.values.clear();
    n.needs_grad = t.requires_grad;
    int id = push(std::move(n));
    leaf_ids_.emplace(&t, id);
    return {this, id};
  }

  // Owns a constant value; never receives gradient.
  Value input(Tensor t) {
    Node n;
    n.kind = Op::kInput;
    n.out = std::move(t);
    n.needs_grad = false;
    return {this, push(std::move(n))};
  }

  Value matmul(Value a, Value b) {
    const Tensor& ta = val(a);
    const Tensor& tb = val(b);
    if (ta.rank() != 2 || tb.rank() != 2)
      throw DimensionError("matmul: operands must be rank 2, got " +
                           ta.shape_str() + " and " + tb.shape_str());
    if (ta.shape[1] != tb.shape[0])
      throw DimensionError("matmul: inner extents disagree: " + ta.shape_str() +
                           " vs " + tb.shape_str());
    Node n = make(Op::kMatMul, {a.id, b.id}, Tensor({ta.shape[0], tb.shape[1]}));
    mm_nn(n.out.values.data(), ta.values.data(), tb.values.data(), ta.shape[0],
          ta.shape[1], tb.shape[1]);
    return finish(std::move(n), "matmul");
  }

  Value transpose(Value a) {
    const Tensor& ta = val(a);
    if (ta.rank() != 2) throw DimensionError("transpose: operand must be rank 2");
    int r = ta.shape[0], c = ta.shape[1];
    Node n = make(Op::kTranspose, {a.id}, Tensor({c, r}));
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j)
        n.out.values[idx(j, i, r)] = ta.values[idx(i, j, c)];
    return finish(std::move(n), "transpose");
  }

  Value add(Value a, Value b) { return binary(Op::kAdd, a, b, "add"); }
  Value sub(Value a, Value b) { return binary(Op::kSub, a, b, "sub"); }
  Value mul(Value a, Value b) { return binary(Op::kMul, a, b, "mul"); }

  // matrix [r x c] plus vector [c], added to every row
  Value add_row_bias(Value m, Value bias) {
    const Tensor& tm = val(m);
    const Tensor& tb = val(bias);
    if (tm.rank() != 2 || tb.rank() != 1 || tb.shape[0] != tm.shape[1])
      throw DimensionError("add_row_bias: need [r x c] and [c], got " +
                           tm.shape_str() + " and " + tb.shape_str());
    int r = tm.shape[0], c = tm.shape[1];
    Node n = make(Op::kAddRowBias, {m.id, bias.id}, Tensor({r, c}));
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j)
        n.out.values[idx(i, j, c)] = tm.values[idx(i, j, c)] + tb.values[static_cast<std::size_t>(j)];
    return finish(std::move(n), "add_row_bias");
  }

  Value scale(Value a, double c) {
    const Tensor& ta = val(a);
    Node n = make(Op::kScale, {a.id}, Tensor(ta.shape));
    n.c = c;
    for (std::size_t i = 0; i < ta.values.size(); ++i)
      n.out.values[i] = c * ta.values[i];
    return finish(std::move(n), "scale");
  }

  Value tanh(Value a) { return unary(Op::kTanh, a, "tanh"); }
  Value abs(Value a) { return unary(Op::kAbs, a, "abs"); }
  Value exp(Value a) { return unary(Op::kExp, a, "exp"); }
  Value log(Value a) { return unary(Op::kLog, a, "log"); }
  Value relu(Value a) { return unary(Op::kRelu, a, "relu"); }

  // softmax along each row of a rank-2 tensor, max-subtracted
  Value row_softmax(Value a) {
    const Tensor& ta = val(a);
    if (ta.rank() != 2) throw DimensionError("row_softmax: operand must be rank 2");
    int r = ta.shape[0], c = ta.shape[1];
    Node n = make(Op::kRowSoftmax, {a.id}, Tensor({r, c}));
    for (int i = 0; i < r; ++i) {
      const double* x = ta.values.data() + idx(i, 0, c);
      double* y = n.out.values.data() + idx(i, 0, c);
      double m = x[0];
      for (int j = 1; j < c; ++j) m = std::max(m, x[j]);
      double z = 0.0;
      for (int j = 0; j < c; ++j) {
        y[j] = std::exp(x[j] - m);
        z += y[j];
      }
      for (int j = 0; j < c; ++j) y[j] /= z;
    }
    return finish(std::move(n), "row_softmax");
  }

  // y = gain * (x - mean_row) / sqrt(var_row + eps) + bias, per row
  Value layer_norm(Value x, Value gain, Value bias, double eps = 1e-5) {
    const Tensor& tx = val(x);
    const Tensor& tg = val(gain);
    const Tensor& tb = val(bias);
    if (tx.rank() != 2 || tg.rank() != 1 || tb.rank() != 1 ||
        tg.shape[0] != tx.shape[1] || tb.shape[0] != tx.shape[1])
      throw DimensionError("layer_norm: need [r x c], [c], [c]");
    int r = tx.shape[0], c = tx.shape[1];
    Node n = make(Op::kLayerNorm, {x.id, gain.id, bias.id}, Tensor({r, c}));
    n.c = eps;
    n.aux.assign(static_cast<std::size_t>(r) * c + r, 0.0);  // xhat rows, then inv_std
    for (int i = 0; i < r; ++i) {
      const double* xv = tx.values.data() + idx(i, 0, c);
      double mu = 0.0;
      for (int j = 0; j < c; ++j) mu += xv[j];
      mu /= c;
      double var = 0.0;
      for (int j = 0; j < c; ++j) var += (xv[j] - mu) * (xv[j] - mu);
      var /= c;
      double inv = 1.0 / std::sqrt(var + eps);
      n.aux[static_cast<std::size_t>(r) * c + i] = inv;
      double* xhat = n.aux.data() + idx(i, 0, c);
      double* y = n.out.values.data() + idx(i, 0, c);
      for (int j = 0; j < c; ++j) {
        xhat[j] = (xv[j] - mu) * inv;
        y[j] = xhat[j] * tg.values[static_cast<std::size_t>(j)] + tb.values[static_cast<std::size_t>(j)];
      }
    }
    return finish(std::move(n), "layer_norm");
  }

  // mean over rows of -log softmax(logits)[row][target], max-stabilized
  Value softmax_cross_entropy(Value logits, std::vector<int> targets) {
    const Tensor& tl = val(logits);
    if (tl.rank() != 2) throw DimensionError("softmax_cross_entropy: logits must be rank 2");
    int r = tl.shape[0], c = tl.shape[1];
    if (static_cast<int>(targets.size()) != r)
      throw DimensionError("softmax_cross_entropy: one target per row required");
    for (int t : targets)
      if (t < 0 || t >= c)
        throw IndexError("softmax_cross_entropy: target " + std::to_string(t) +
                         " out of range for " + std::to_string(c) + " columns");
    Node n = make(Op::kSoftmaxXent, {logits.id}, Tensor({}, {0.0}));
    n.ids = std::move(targets);
    n.aux.assign(tl.values.size(), 0.0);  // cached probabilities
    double total = 0.0;
    for (int i = 0; i < r; ++i) {
      const double* x = tl.values.data() + idx(i, 0, c);
      double* p = n.aux.data() + idx(i, 0, c);
      double m = x[0];
      for (int j = 1; j < c; ++j) m = std::max(m, x[j]);
      double z = 0.0;
      for (int j = 0; j < c; ++j) {
        p[j] = std::exp(x[j] - m);
        z += p[j];
      }
      for (int j = 0; j < c; ++j) p[j] /= z;
      total += std::log(z) + m - x[n.ids[static_cast<std::size_t>(i)]];
    }
    n.out.values[0] = total / r;
    return finish(std::move(n), "softmax_cross_entropy");
  }

  Value reduce_mean(Value a, int axis) { return reduce(Op::kReduceMean, a, axis); }
  Value reduce_sum(Value a, int axis) { return reduce(Op::kReduceSum, a, axis); }

  // stack parts vertically; rank-1 parts count as single rows
  Value concat_rows(const std::vector<Value>& parts) {
    if (parts.empty()) throw DimensionError("concat_rows: no parts");
    int c = val(parts[0]).cols();
    int total = 0;
    std::vector<int> in;
    for (Value p : parts) {
      const Tensor& t = val(p);
      if (t.rank() != 1 && t.rank() != 2)
        throw DimensionError("concat_rows: parts must be rank 1 or 2");
      if (t.cols() != c) throw DimensionError("concat_rows: column counts differ");
      total += t.rows();
      in.push_back(p.id);
    }
    Node n = make(Op::kConcatRows, std::move(in), Tensor({total, c}));
    std::size_t off = 0;
    for (Value p : parts) {
      const Tensor& t = val(p);
      std::copy(t.values.begin(), t.values.end(), n.out.values.begin() + static_cast<long>(off));
      off += t.values.size();
    }
    return finish(std::move(n), "concat_rows");
  }

  // concatenate along columns; all rank-1 gives a longer vector, all rank-2
  // with equal row counts gives a wider matrix
  Value concat_cols(const std::vector<Value>& parts) {
    if (parts.empty()) throw DimensionError("concat_cols: no parts");
    bool vec = val(parts[0]).rank() == 1;
    int r = vec ? 1 : val(parts[0]).rows();
    int total_c = 0;
    std::vector<int> in;
    for (Value p : parts) {
      const Tensor& t = val(p);
      if ((t.rank() == 1) != vec || (!vec && t.rows() != r))
        throw DimensionError("concat_cols: incompatible parts");
      total_c += t.cols();
      in.push_back(p.id);
    }
    Tensor out = vec ? Tensor({total_c}) : Tensor({r, total_c});
    Node n = make(Op::kConcatCols, std::move(in), std::move(out));
    int col_off = 0;
    for (Value p : parts) {
      const Tensor& t = val(p);
      int pc = t.cols();
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < pc; ++j)
          n.out.values[idx(i, col_off + j, total_c)] = t.values[idx(i, j, pc)];
      col_off += pc;
    }
    return finish(std::move(n), "concat_cols");
  }

  // gather rows of an id table; backward scatter-adds into the table
  Value embedding_rows(Value table, std::vector<int> ids) {
    const Tensor& tt = val(table);
    if (tt.rank() != 2) throw DimensionError("embedding_rows: table must be rank 2");
    int rows = tt.shape[0], c = tt.shape[1];
    for (int id : ids)
      if (id < 0 || id >= rows)
        throw IndexError("embedding_rows: id " + std::to_string(id) +
                         " out of range for " + std::to_string(rows) + " rows");
    Node n = make(Op::kEmbeddingRows, {table.id},
                  Tensor({static_cast<int>(ids.size()), c}));
    n.ids = std::move(ids);
    for (std::size_t i = 0; i < n.ids.size(); ++i)
      std::copy(tt.values.begin() + idx(n.ids[i], 0, c),
                tt.values.begin() + idx(n.ids[i], 0, c) + c,
                n.out.values.begin() + static_cast<long>(i) * c);
    return finish(std::move(n), "embedding_rows");
  }

  // Row i of the output is the sum of table rows listed in ids[i]. The ids
  // are summed in sorted order so the result is bit-identical under any
  // permutation of the list.
  Value ngram_sum_rows(Value table, std::vector<std::vector<int>> ids) {
    const Tensor& tt = val(table);
    if (tt.rank() != 2) throw DimensionError("ngram_sum_rows: table must be rank 2");
    int rows = tt.shape[0], c = tt.shape[1];
    for (auto& list : ids) {
      std::sort(list.begin(), list.end());
      for (int id : list)
        if (id < 0 || id >= rows)
          throw IndexError("ngram_sum_rows: id out of range");
    }
    Node n = make(Op::kNgramSumRows, {table.id},
                  Tensor({static_cast<int>(ids.size()), c}));
    n.id_lists = std::move(ids);
    for (std::size_t i = 0; i < n.id_lists.size(); ++i) {
      double* out = n.out.values.data() + static_cast<long>(i) * c;
      for (int id : n.id_lists[i]) {
        const double* row = tt.values.data() + idx(id, 0, c);
        for (int j = 0; j < c; ++j) out[j] += row[j];
      }
    }
    return finish(std::move(n), "ngram_sum_rows");
  }

  // ---- traversal ----

  // Populates gradients of every requires_grad leaf reachable from `loss`.
  // One shot per graph: calling it again without rebuilding is an error.
  void backward(Value loss) {
    if (backward_done_)
      throw StateError("backward: already called on this graph; rebuild the tape");
    const Tensor& tl = val(loss);
    if (tl.size() != 1)
      throw StateError("backward: loss must be scalar, got " + tl.shape_str());
    backward_done_ = true;

    for (Node& n : nodes_) {
      if (n.kind == Op::kLeaf)
        n.out.values.assign(static_cast<std::size_t>(Tensor::count(n.out.shape)), 0.0);
      // leaves use out.values as the gradient accumulator; everyone else
      // gets a dedicated buffer
      n.grad.assign(n.kind == Op::kLeaf ? 0 : static_cast<std::size_t>(Tensor::count(n.out.shape)), 0.0);
    }
    grad_buf(loss.id)[0] = 1.0;

    for (int id = static_cast<int>(nodes_.size()) - 1; id >= 0; --id) {
      Node& n = nodes_[static_cast<std::size_t>(id)];
      if (!n.needs_grad || n.kind == Op::kLeaf || n.kind == Op::kInput) continue;
      backward_node(n);
    }

    for (auto& [ext, id] : leaf_ids_) {
      Node& n = nodes_[static_cast<std::size_t>(id)];
      if (!ext->requires_grad) continue;
      ext->ensure_grad();
      for (std::size_t i = 0; i < ext->grad.size(); ++i)
        ext->grad[i] += n.out.values[i];
      n.out.values.clear();  // restore alias-only state
    }
  }

  const Tensor& value(Value v) const { return val(v); }
  double scalar_value(Value v) const { return val(v).values[0]; }
  std::size_t num_nodes() const { return nodes_.size(); }
  bool backward_done() const { return backward_done_; }

 private:
  enum class Op {
    kLeaf,
    kInput,
    kMatMul,
    kTranspose,
    kAdd,
    kSub,
    kMul,
    kAddRowBias,
    kScale,
    kTanh,
    kAbs,
    kExp,
    kLog,
    kRelu,
    kRowSoftmax,
    kLayerNorm,
    kSoftmaxXent,
    kReduceMean,
    kReduceSum,
    kConcatRows,
    kConcatCols,
    kEmbeddingRows,
    kNgramSumRows,
  };

  struct Node {
    Op kind;
    std::vector<int> inputs;
    Tensor out;            // leaf: shape only, values alias the external tensor
    Tensor* external = nullptr;
    std::vector<double> grad;
    std::vector<int> ids;
    std::vector<std::vector<int>> id_lists;
    std::vector<double> aux;
    double c = 0.0;
    int axis = -1;
    bool needs_grad = false;
  };

  static std::size_t idx(int r, int c, int cols) {
    return static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) +
           static_cast<std::size_t>(c);
  }

  const Tensor& val(Value v) const {
    const Node& n = nodes_.at(static_cast<std::size_t>(v.id));
    return n.external ? *n.external : n.out;
  }
  const Tensor& val(int id) const { return val(Value{nullptr, id}); }

  double* grad_buf(int id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    return n.kind == Op::kLeaf ? n.out.values.data() : n.grad.data();
  }

  Node make(Op kind, std::vector<int> inputs, Tensor out) {
    Node n;
    n.kind = kind;
    n.inputs = std::move(inputs);
    n.out = std::move(out);
    for (int i : n.inputs)
      n.needs_grad = n.needs_grad || nodes_[static_cast<std::size_t>(i)].needs_grad;
    return n;
  }

  int push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  Value finish(Node n, const char* opname) {
    for (double v : n.out.values)
      if (!std::isfinite(v))
        throw NumericError(std::string(opname) + ": non-finite value in output");
    return {this, push(std::move(n))};
  }

  Value binary(Op kind, Value a, Value b, const char* name) {
    const Tensor& ta = val(a);
    const Tensor& tb = val(b);
    if (!ta.same_shape(tb))
      throw DimensionError(std::string(name) + ": shapes differ: " +
                           ta.shape_str() + " vs " + tb.shape_str());
    Node n = make(kind, {a.id, b.id}, Tensor(ta.shape));
    const double* x = ta.values.data();
    const double* y = tb.values.data();
    double* o = n.out.values.data();
    std::size_t m = ta.values.size();
    switch (kind) {
      case Op::kAdd: for (std::size_t i = 0; i < m; ++i) o[i] = x[i] + y[i]; break;
      case Op::kSub: for (std::size_t i = 0; i < m; ++i) o[i] = x[i] - y[i]; break;
      case Op::kMul: for (std::size_t i = 0; i < m; ++i) o[i] = x[i] * y[i]; break;
      default: throw StateError("binary: bad op");
    }
    return finish(std::move(n), name);
  }

  Value unary(Op kind, Value a, const char* name) {
    const Tensor& ta = val(a);
    Node n = make(kind, {a.id}, Tensor(ta.shape));
    const double* x = ta.values.data();
    double* o = n.out.values.data();
    std::size_t m = ta.values.size();
    switch (kind) {
      case Op::kTanh: for (std::size_t i = 0; i < m; ++i) o[i] = std::tanh(x[i]); break;
      case Op::kAbs:  for (std::size_t i = 0; i < m; ++i) o[i] = std::abs(x[i]);  break;
      case Op::kExp:  for (std::size_t i = 0; i < m; ++i) o[i] = std::exp(x[i]);  break;
      case Op::kRelu: for (std::size_t i = 0; i < m; ++i) o[i] = x[i] > 0.0 ? x[i] : 0.0; break;
      case Op::kLog:
        for (std::size_t i = 0; i < m; ++i) {
          if (x[i] <= 0.0)
            throw DomainError("log: input must be strictly positive");
          o[i] = std::log(x[i]);
        }
        break;
      default: throw StateError("unary: bad op");
    }
    return finish(std::move(n), name);
  }

  Value reduce(Op kind, Value a, int axis) {
    const Tensor& ta = val(a);
    bool mean = kind == Op::kReduceMean;
    const char* name = mean ? "reduce_mean" : "reduce_sum";
    if (ta.rank() == 1) {
      if (axis != 0) throw DimensionError(std::string(name) + ": invalid axis for rank 1");
      Node n = make(kind, {a.id}, Tensor({}, {0.0}));
      n.axis = 0;
      double s = 0.0;
      for (double v : ta.values) s += v;
      n.out.values[0] = mean ? s / static_cast<double>(ta.values.size()) : s;
      return finish(std::move(n), name);
    }
    if (ta.rank() != 2 || (axis != 0 && axis != 1))
      throw DimensionError(std::string(name) + ": axis must be < rank");
    int r = ta.shape[0], c = ta.shape[1];
    Node n = make(kind, {a.id}, Tensor({axis == 0 ? c : r}));
    n.axis = axis;
    if (axis == 0) {
      for (int j = 0; j < c; ++j) {
        double s = 0.0;
        for (int i = 0; i < r; ++i) s += ta.values[idx(i, j, c)];
        n.out.values[static_cast<std::size_t>(j)] = mean ? s / r : s;
      }
    } else {
      for (int i = 0; i < r; ++i) {
        double s = 0.0;
        for (int j = 0; j < c; ++j) s += ta.values[idx(i, j, c)];
        n.out.values[static_cast<std::size_t>(i)] = mean ? s / c : s;
      }
    }
    return finish(std::move(n), name);
  }

  // C[m x n] += A[m x k] * B[k x n]
  static void mm_nn(double* cdat, const double* a, const double* b, int m,
                    int k, int n) {
    for (int i = 0; i < m; ++i)
      for (int p = 0; p < k; ++p) {
        double av = a[idx(i, p, k)];
        if (av == 0.0) continue;
        const double* brow = b + idx(p, 0, n);
        double* crow = cdat + idx(i, 0, n);
        for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
  }

  // C[m x n] += A[m x k] * B^T where B is [n x k]
  static void mm_nt(double* cdat, const double* a, const double* b, int m,
                    int k, int n) {
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) {
        const double* arow = a + idx(i, 0, k);
        const double* brow = b + idx(j, 0, k);
        double s = 0.0;
        for (int p = 0; p < k; ++p) s += arow[p] * brow[p];
        cdat[idx(i, j, n)] += s;
      }
  }

  // C[m x n] += A^T * B where A is [k x m], B is [k x n]
  static void mm_tn(double* cdat, const double* a, const double* b, int m,
                    int k, int n) {
    for (int p = 0; p < k; ++p)
      for (int i = 0; i < m; ++i) {
        double av = a[idx(p, i, m)];
        if (av == 0.0) continue;
        const double* brow = b + idx(p, 0, n);
        double* crow = cdat + idx(i, 0, n);
        for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
  }

  void backward_node(Node& n) {
    const double* g = n.grad.data();
    switch (n.kind) {
      case Op::kMatMul: {
        const Tensor& a = val(n.inputs[0]);
        const Tensor& b = val(n.inputs[1]);
        int m = a.shape[0], k = a.shape[1], c = b.shape[1];
        // dA = dC * B^T, dB = A^T * dC
        if (wants(n.inputs[0]))
          mm_nt(grad_buf(n.inputs[0]), g, b.values.data(), m, c, k);
        if (wants(n.inputs[1]))
          mm_tn(grad_buf(n.inputs[1]), a.values.data(), g, k, m, c);
        break;
      }
      case Op::kTranspose: {
        const Tensor& a = val(n.inputs[0]);
        if (!wants(n.inputs[0])) break;
        int r = a.shape[0], c = a.shape[1];
        double* da = grad_buf(n.inputs[0]);
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < c; ++j) da[idx(i, j, c)] += g[idx(j, i, r)];
        break;
      }
      case Op::kAdd: {
        acc_same(n.inputs[0], g, n.grad.size(), +1.0);
        acc_same(n.inputs[1], g, n.grad.size(), +1.0);
        break;
      }
      case Op::kSub: {
        acc_same(n.inputs[0], g, n.grad.size(), +1.0);
        acc_same(n.inputs[1], g, n.grad.size(), -1.0);
        break;
      }
      case Op::kMul: {
        const Tensor& a = val(n.inputs[0]);
        const Tensor& b = val(n.inputs[1]);
        if (wants(n.inputs[0])) {
          double* da = grad_buf(n.inputs[0]);
          for (std::size_t i = 0; i < n.grad.size(); ++i) da[i] += g[i] * b.values[i];
        }
        if (wants(n.inputs[1])) {
          double* db = grad_buf(n.inputs[1]);
          for (std::size_t i = 0; i < n.grad.size(); ++i) db[i] += g[i] * a.values[i];
        }
        break;
      }
      case Op::kAddRowBias: {
        const Tensor& m = val(n.inputs[0]);
        int r = m.shape[0], c = m.shape[1];
        acc_same(n.inputs[0], g, n.grad.size(), +1.0);
        if (wants(n.inputs[1])) {
          double* db = grad_buf(n.inputs[1]);
          for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) db[j] += g[idx(i, j, c)];
        }
        break;
      }
      case Op::kScale: {
        if (!wants(n.inputs[0])) break;
        double* da = grad_buf(n.inputs[0]);
        for (std::size_t i = 0; i < n.grad.size(); ++i) da[i] += n.c * g[i];
        break;
      }
      case Op::kTanh: {
        if (!wants(n.inputs[0])) break;
        double* da = grad_buf(n.inputs[0]);
        for (std::size_t i = 0; i < n.grad.size(); ++i)
          da[i] += g[i] * (1.0 - n.out.values[i] * n.out.values[i]);
        break;
      }
      case Op::kAbs: {
        if (!wants(n.inputs[0])) break;
        const Tensor& a = val(n.inputs[0]);
        double* da = grad_buf(n.inputs[0]);
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
          double x = a.values[i];
          // subgradient 0 at x == 0
          da[i] += g[i] * (x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0));
        }
        break;
      }
      case Op::kExp: {
        if (!wants(n.inputs[0])) break;
        double* da = grad_buf(n.inputs[0]);
        for (std::size_t i = 0; i < n.grad.size(); ++i) da[i] += g[i] * n.out.values[i];
        break;
      }
      case Op::kLog: {
        if (!wants(n.inputs[0])) break;
        const Tensor& a = val(n.inputs[0]);
        double* da = grad_buf(n.inputs[0]);
        for (std::size_t i = 0; i < n.grad.size(); ++i) da[i] += g[i] / a.values[i];
        break;
      }
      case Op::kRelu: {
        if (!wants(n.inputs[0])) break;
        const Tensor& a = val(n.inputs[0]);
        double* da = grad_buf(n.inputs[0]);
        for (std::size_t i = 0; i < n.grad.size(); ++i)
          da[i] += a.values[i] > 0.0 ? g[i] : 0.0;
        break;
      }
      case Op::kRowSoftmax: {
        if (!wants(n.inputs[0])) break;
        int r = n.out.shape[0], c = n.out.shape[1];
        double* da = grad_buf(n.inputs[0]);
        for (int i = 0; i < r; ++i) {
          const double* y = n.out.values.data() + idx(i, 0, c);
          const double* gy = g + idx(i, 0, c);
          double dot = 0.0;
          for (int j = 0; j < c; ++j) dot += gy[j] * y[j];
          for (int j = 0; j < c; ++j) da[idx(i, j, c)] += y[j] * (gy[j] - dot);
        }
        break;
      }
      case Op::kLayerNorm: {
        int r = n.out.shape[0], c = n.out.shape[1];
        const Tensor& gain = val(n.inputs[1]);
        const double* xhat = n.aux.data();
        const double* inv = n.aux.data() + static_cast<std::size_t>(r) * c;
        double* dx = wants(n.inputs[0]) ? grad_buf(n.inputs[0]) : nullptr;
        double* dg = wants(n.inputs[1]) ? grad_buf(n.inputs[1]) : nullptr;
        double* db = wants(n.inputs[2]) ? grad_buf(n.inputs[2]) : nullptr;
        std::vector<double> dxhat(static_cast<std::size_t>(c));
        for (int i = 0; i < r; ++i) {
          const double* gy = g + idx(i, 0, c);
          const double* xh = xhat + idx(i, 0, c);
          double m1 = 0.0, m2 = 0.0;
          for (int j = 0; j < c; ++j) {
            dxhat[static_cast<std::size_t>(j)] = gy[j] * gain.values[static_cast<std::size_t>(j)];
            m1 += dxhat[static_cast<std::size_t>(j)];
            m2 += dxhat[static_cast<std::size_t>(j)] * xh[j];
            if (dg) dg[j] += gy[j] * xh[j];
            if (db) db[j] += gy[j];
          }
          m1 /= c;
          m2 /= c;
          if (dx)
            for (int j = 0; j < c; ++j)
              dx[idx(i, j, c)] += inv[i] * (dxhat[static_cast<std::size_t>(j)] - m1 - xh[j] * m2);
        }
        break;
      }
      case Op::kSoftmaxXent: {
        if (!wants(n.inputs[0])) break;
        const Tensor& logits = val(n.inputs[0]);
        int r = logits.shape[0], c = logits.shape[1];
        double go = g[0] / r;
        double* dl = grad_buf(n.inputs[0]);
        for (int i = 0; i < r; ++i) {
          const double* p = n.aux.data() + idx(i, 0, c);
          int t = n.ids[static_cast<std::size_t>(i)];
          for (int j = 0; j < c; ++j)
            dl[idx(i, j, c)] += go * (p[j] - (j == t ? 1.0 : 0.0));
        }
        break;
      }
      case Op::kReduceMean:
      case Op::kReduceSum: {
        if (!wants(n.inputs[0])) break;
        const Tensor& a = val(n.inputs[0]);
        bool mean = n.kind == Op::kReduceMean;
        double* da = grad_buf(n.inputs[0]);
        if (a.rank() == 1) {
          double w = mean ? g[0] / static_cast<double>(a.values.size()) : g[0];
          for (std::size_t i = 0; i < a.values.size(); ++i) da[i] += w;
          break;
        }
        int r = a.shape[0], c = a.shape[1];
        if (n.axis == 0) {
          for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j)
              da[idx(i, j, c)] += mean ? g[j] / r : g[j];
        } else {
          for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j)
              da[idx(i, j, c)] += mean ? g[i] / c : g[i];
        }
        break;
      }
      case Op::kConcatRows: {
        std::size_t off = 0;
        for (int in : n.inputs) {
          const Tensor& t = val(in);
          if (wants(in)) {
            double* d = grad_buf(in);
            for (std::size_t i = 0; i < t.values.size(); ++i) d[i] += g[off + i];
          }
          off += t.values.size();
        }
        break;
      }
      case Op::kConcatCols: {
        int total_c = n.out.cols();
        int r = n.out.rank() == 1 ? 1 : n.out.shape[0];
        int col_off = 0;
        for (int in : n.inputs) {
          const Tensor& t = val(in);
          int pc = t.cols();
          if (wants(in)) {
            double* d = grad_buf(in);
            for (int i = 0; i < r; ++i)
              for (int j = 0; j < pc; ++j)
                d[idx(i, j, pc)] += g[idx(i, col_off + j, total_c)];
          }
          col_off += pc;
        }
        break;
      }
      case Op::kEmbeddingRows: {
        if (!wants(n.inputs[0])) break;
        int c = n.out.shape[1];
        double* dt = grad_buf(n.inputs[0]);
        for (std::size_t i = 0; i < n.ids.size(); ++i) {
          const double* row = g + static_cast<long>(i) * c;
          double* drow = dt + idx(n.ids[i], 0, c);
          for (int j = 0; j < c; ++j) drow[j] += row[j];
        }
        break;
      }
      case Op::kNgramSumRows: {
        if (!wants(n.inputs[0])) break;
        int c = n.out.shape[1];
        double* dt = grad_buf(n.inputs[0]);
        for (std::size_t i = 0; i < n.id_lists.size(); ++i) {
          const double* row = g + static_cast<long>(i) * c;
          for (int id : n.id_lists[i]) {
            double* drow = dt + idx(id, 0, c);
            for (int j = 0; j < c; ++j) drow[j] += row[j];
          }
        }
        break;
      }
      case Op::kLeaf:
      case Op::kInput:
        break;
    }
  }

  bool wants(int id) const { return nodes_[static_cast<std::size_t>(id)].needs_grad; }

  void acc_same(int id, const double* g, std::size_t m, double sign) {
    if (!wants(id)) return;
    double* d = grad_buf(id);
    for (std::size_t i = 0; i < m; ++i) d[i] += sign * g[i];
  }

  std::deque<Node> nodes_;
  std::unordered_map<Tensor*, int> leaf_ids_;
  bool backward_done_ = false;
};

inline Value operator+(Value a, Value b) { return a.g->add(a, b); }
inline Value operator-(Value a, Value b) { return a.g->sub(a, b); }
inline Value operator*(Value a, Value b) { return a.g->mul(a, b); }

}  // namespace xling
