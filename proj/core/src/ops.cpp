//
// Copyright 2026 The attnlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "attnlab/ops.hpp"

#include <cmath>
#include <string>

#include "attnlab/errors.hpp"

namespace attnlab {

namespace {

constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

bool want_grad(const Tensor& t) { return grad_enabled() && t.requires_grad(); }

void require_2d(const Tensor& t, const char* op) {
  if (t.ndim() != 2) throw ContractError(std::string(op) + ": expected a 2-d tensor");
}

void attach(Tensor& out, std::vector<Tensor> parents,
            std::function<void(const Tensor&)> bw) {
  auto n = std::make_shared<Node>();
  n->parents = std::move(parents);
  n->backward = std::move(bw);
  n->seq = next_tape_seq();
  out.set_node(std::move(n));
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_2d(a, "matmul");
  require_2d(b, "matmul");
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) throw ContractError("matmul: inner extents differ");

  const bool rg = want_grad(a) || want_grad(b);
  Tensor out = Tensor::zeros({m, n}, rg);
  {
    auto av = a.values();
    auto bv = b.values();
    auto ov = out.mutable_values();
    for (int i = 0; i < m; ++i) {
      for (int p = 0; p < k; ++p) {
        const double aip = av[static_cast<size_t>(i * k + p)];
        if (aip == 0.0) continue;
        const size_t brow = static_cast<size_t>(p * n);
        const size_t orow = static_cast<size_t>(i * n);
        for (int j = 0; j < n; ++j) ov[orow + j] += aip * bv[brow + j];
      }
    }
  }
  if (rg) {
    attach(out, {a, b}, [m, k, n](const Tensor& o) {
      Tensor& pa = o.node()->parents[0];
      Tensor& pb = o.node()->parents[1];
      auto g = o.grad();
      if (pa.requires_grad()) {
        pa.ensure_grad();
        auto ga = pa.mutable_grad();
        auto bv = pb.values();
        // dA = G . B^T
        for (int i = 0; i < m; ++i)
          for (int p = 0; p < k; ++p) {
            double acc = 0.0;
            for (int j = 0; j < n; ++j)
              acc += g[static_cast<size_t>(i * n + j)] * bv[static_cast<size_t>(p * n + j)];
            ga[static_cast<size_t>(i * k + p)] += acc;
          }
      }
      if (pb.requires_grad()) {
        pb.ensure_grad();
        auto gb = pb.mutable_grad();
        auto av = pa.values();
        // dB = A^T . G
        for (int p = 0; p < k; ++p)
          for (int i = 0; i < m; ++i) {
            const double aip = av[static_cast<size_t>(i * k + p)];
            if (aip == 0.0) continue;
            for (int j = 0; j < n; ++j)
              gb[static_cast<size_t>(p * n + j)] += aip * g[static_cast<size_t>(i * n + j)];
          }
      }
    });
  }
  return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_2d(a, "matmul_nt");
  require_2d(b, "matmul_nt");
  const int m = a.dim(0), k = a.dim(1), n = b.dim(0);
  if (b.dim(1) != k) throw ContractError("matmul_nt: inner extents differ");

  const bool rg = want_grad(a) || want_grad(b);
  Tensor out = Tensor::zeros({m, n}, rg);
  {
    auto av = a.values();
    auto bv = b.values();
    auto ov = out.mutable_values();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int p = 0; p < k; ++p)
          acc += av[static_cast<size_t>(i * k + p)] * bv[static_cast<size_t>(j * k + p)];
        ov[static_cast<size_t>(i * n + j)] = acc;
      }
  }
  if (rg) {
    attach(out, {a, b}, [m, k, n](const Tensor& o) {
      Tensor& pa = o.node()->parents[0];
      Tensor& pb = o.node()->parents[1];
      auto g = o.grad();
      if (pa.requires_grad()) {
        pa.ensure_grad();
        auto ga = pa.mutable_grad();
        auto bv = pb.values();
        // dA = G . B
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < n; ++j) {
            const double gij = g[static_cast<size_t>(i * n + j)];
            if (gij == 0.0) continue;
            for (int p = 0; p < k; ++p)
              ga[static_cast<size_t>(i * k + p)] += gij * bv[static_cast<size_t>(j * k + p)];
          }
      }
      if (pb.requires_grad()) {
        pb.ensure_grad();
        auto gb = pb.mutable_grad();
        auto av = pa.values();
        // dB = G^T . A
        for (int j = 0; j < n; ++j)
          for (int i = 0; i < m; ++i) {
            const double gij = g[static_cast<size_t>(i * n + j)];
            if (gij == 0.0) continue;
            for (int p = 0; p < k; ++p)
              gb[static_cast<size_t>(j * k + p)] += gij * av[static_cast<size_t>(i * k + p)];
          }
      }
    });
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw ContractError("add: shape mismatch");
  const bool rg = want_grad(a) || want_grad(b);
  Tensor out = Tensor::zeros(a.shape(), rg);
  auto av = a.values();
  auto bv = b.values();
  auto ov = out.mutable_values();
  for (size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] + bv[i];
  if (rg) {
    attach(out, {a, b}, [](const Tensor& o) {
      auto g = o.grad();
      for (Tensor& p : o.node()->parents) {
        if (!p.requires_grad()) continue;
        p.ensure_grad();
        auto pg = p.mutable_grad();
        for (size_t i = 0; i < pg.size(); ++i) pg[i] += g[i];
      }
    });
  }
  return out;
}

Tensor add_row_broadcast(const Tensor& x, const Tensor& bias) {
  require_2d(x, "add_row_broadcast");
  if (bias.ndim() != 1 || bias.dim(0) != x.dim(1)) {
    throw ContractError("add_row_broadcast: bias length must equal column count");
  }
  const int n = x.dim(0), m = x.dim(1);
  const bool rg = want_grad(x) || want_grad(bias);
  Tensor out = Tensor::zeros(x.shape(), rg);
  auto xv = x.values();
  auto bv = bias.values();
  auto ov = out.mutable_values();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      ov[static_cast<size_t>(i * m + j)] = xv[static_cast<size_t>(i * m + j)] + bv[static_cast<size_t>(j)];
  if (rg) {
    attach(out, {x, bias}, [n, m](const Tensor& o) {
      Tensor& px = o.node()->parents[0];
      Tensor& pb = o.node()->parents[1];
      auto g = o.grad();
      if (px.requires_grad()) {
        px.ensure_grad();
        auto gx = px.mutable_grad();
        for (size_t i = 0; i < gx.size(); ++i) gx[i] += g[i];
      }
      if (pb.requires_grad()) {
        pb.ensure_grad();
        auto gb = pb.mutable_grad();
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < m; ++j) gb[static_cast<size_t>(j)] += g[static_cast<size_t>(i * m + j)];
      }
    });
  }
  return out;
}

Tensor scale(const Tensor& x, double c) {
  const bool rg = want_grad(x);
  Tensor out = Tensor::zeros(x.shape(), rg);
  auto xv = x.values();
  auto ov = out.mutable_values();
  for (size_t i = 0; i < ov.size(); ++i) ov[i] = c * xv[i];
  if (rg) {
    attach(out, {x}, [c](const Tensor& o) {
      Tensor& p = o.node()->parents[0];
      p.ensure_grad();
      auto pg = p.mutable_grad();
      auto g = o.grad();
      for (size_t i = 0; i < pg.size(); ++i) pg[i] += c * g[i];
    });
  }
  return out;
}

Tensor softmax_rows(const Tensor& logits) {
  require_2d(logits, "softmax_rows");
  const int n = logits.dim(0), m = logits.dim(1);
  if (m < 1) throw ContractError("softmax_rows: need at least one column");
  auto xv = logits.values();
  for (double v : xv) {
    if (!std::isfinite(v)) throw NumericError("softmax_rows: non-finite input");
  }

  const bool rg = want_grad(logits);
  Tensor out = Tensor::zeros(logits.shape(), rg);
  auto ov = out.mutable_values();
  for (int i = 0; i < n; ++i) {
    const size_t row = static_cast<size_t>(i * m);
    double mx = xv[row];
    for (int j = 1; j < m; ++j) mx = std::max(mx, xv[row + j]);
    double z = 0.0;
    for (int j = 0; j < m; ++j) {
      const double e = std::exp(xv[row + j] - mx);
      ov[row + j] = e;
      z += e;
    }
    for (int j = 0; j < m; ++j) ov[row + j] /= z;
  }
  if (rg) {
    attach(out, {logits}, [n, m](const Tensor& o) {
      Tensor& p = o.node()->parents[0];
      p.ensure_grad();
      auto pg = p.mutable_grad();
      auto g = o.grad();
      auto y = o.values();
      // dx = y (.) (g - <g, y>) per row
      for (int i = 0; i < n; ++i) {
        const size_t row = static_cast<size_t>(i * m);
        double dot = 0.0;
        for (int j = 0; j < m; ++j) dot += g[row + j] * y[row + j];
        for (int j = 0; j < m; ++j) pg[row + j] += y[row + j] * (g[row + j] - dot);
      }
    });
  }
  return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  require_2d(x, "layer_norm");
  const int n = x.dim(0), d = x.dim(1);
  if (gamma.ndim() != 1 || gamma.dim(0) != d || beta.ndim() != 1 || beta.dim(0) != d) {
    throw ContractError("layer_norm: gamma/beta must have length d");
  }
  const bool rg = want_grad(x) || want_grad(gamma) || want_grad(beta);
  Tensor out = Tensor::zeros(x.shape(), rg);
  // Cache per-row inverse stddev and normalized values for backward.
  auto inv_std = std::make_shared<std::vector<double>>(static_cast<size_t>(n));
  auto x_hat = std::make_shared<std::vector<double>>(static_cast<size_t>(n * d));
  {
    auto xv = x.values();
    auto gv = gamma.values();
    auto bv = beta.values();
    auto ov = out.mutable_values();
    for (int i = 0; i < n; ++i) {
      const size_t row = static_cast<size_t>(i * d);
      double mu = 0.0;
      for (int j = 0; j < d; ++j) mu += xv[row + j];
      mu /= d;
      double var = 0.0;
      for (int j = 0; j < d; ++j) {
        const double c = xv[row + j] - mu;
        var += c * c;
      }
      var /= d;
      const double inv = 1.0 / std::sqrt(var + eps);
      (*inv_std)[static_cast<size_t>(i)] = inv;
      for (int j = 0; j < d; ++j) {
        const double xh = (xv[row + j] - mu) * inv;
        (*x_hat)[row + j] = xh;
        ov[row + j] = gv[static_cast<size_t>(j)] * xh + bv[static_cast<size_t>(j)];
      }
    }
  }
  if (rg) {
    attach(out, {x, gamma, beta}, [n, d, inv_std, x_hat](const Tensor& o) {
      Tensor& px = o.node()->parents[0];
      Tensor& pg_ = o.node()->parents[1];
      Tensor& pb = o.node()->parents[2];
      auto g = o.grad();
      auto gv = pg_.values();
      if (pg_.requires_grad()) pg_.ensure_grad();
      if (pb.requires_grad()) pb.ensure_grad();
      if (px.requires_grad()) px.ensure_grad();
      for (int i = 0; i < n; ++i) {
        const size_t row = static_cast<size_t>(i * d);
        const double inv = (*inv_std)[static_cast<size_t>(i)];
        double mean_dxh = 0.0, mean_dxh_xh = 0.0;
        for (int j = 0; j < d; ++j) {
          const double dxh = g[row + j] * gv[static_cast<size_t>(j)];
          mean_dxh += dxh;
          mean_dxh_xh += dxh * (*x_hat)[row + j];
        }
        mean_dxh /= d;
        mean_dxh_xh /= d;
        if (px.requires_grad()) {
          auto gx = px.mutable_grad();
          for (int j = 0; j < d; ++j) {
            const double dxh = g[row + j] * gv[static_cast<size_t>(j)];
            gx[row + j] += inv * (dxh - mean_dxh - (*x_hat)[row + j] * mean_dxh_xh);
          }
        }
        if (pg_.requires_grad()) {
          auto gg = pg_.mutable_grad();
          for (int j = 0; j < d; ++j)
            gg[static_cast<size_t>(j)] += g[row + j] * (*x_hat)[row + j];
        }
        if (pb.requires_grad()) {
          auto gb = pb.mutable_grad();
          for (int j = 0; j < d; ++j) gb[static_cast<size_t>(j)] += g[row + j];
        }
      }
    });
  }
  return out;
}

Tensor embedding_gather(const Tensor& table, const std::vector<int>& ids) {
  require_2d(table, "embedding_gather");
  const int v = table.dim(0), d = table.dim(1);
  if (ids.empty()) throw ContractError("embedding_gather: empty id list");
  for (int id : ids) {
    if (id < 0 || id >= v) {
      throw ContractError("embedding_gather: id " + std::to_string(id) + " out of range [0, " +
                          std::to_string(v) + ")");
    }
  }
  const int n = static_cast<int>(ids.size());
  const bool rg = want_grad(table);
  Tensor out = Tensor::zeros({n, d}, rg);
  auto tv = table.values();
  auto ov = out.mutable_values();
  for (int i = 0; i < n; ++i) {
    const size_t src = static_cast<size_t>(ids[static_cast<size_t>(i)] * d);
    const size_t dst = static_cast<size_t>(i * d);
    for (int j = 0; j < d; ++j) ov[dst + j] = tv[src + j];
  }
  if (rg) {
    auto ids_copy = std::make_shared<std::vector<int>>(ids);
    attach(out, {table}, [d, ids_copy](const Tensor& o) {
      Tensor& p = o.node()->parents[0];
      p.ensure_grad();
      auto pg = p.mutable_grad();
      auto g = o.grad();
      for (size_t i = 0; i < ids_copy->size(); ++i) {
        const size_t dst = static_cast<size_t>((*ids_copy)[i]) * static_cast<size_t>(d);
        const size_t src = i * static_cast<size_t>(d);
        for (int j = 0; j < d; ++j) pg[dst + j] += g[src + j];
      }
    });
  }
  return out;
}

Tensor pick_row(const Tensor& x, int row) {
  require_2d(x, "pick_row");
  const int n = x.dim(0), d = x.dim(1);
  if (row < 0 || row >= n) throw ContractError("pick_row: row out of range");
  const bool rg = want_grad(x);
  Tensor out = Tensor::zeros({1, d}, rg);
  auto xv = x.values();
  auto ov = out.mutable_values();
  const size_t base = static_cast<size_t>(row * d);
  for (int j = 0; j < d; ++j) ov[static_cast<size_t>(j)] = xv[base + j];
  if (rg) {
    attach(out, {x}, [row, d](const Tensor& o) {
      Tensor& p = o.node()->parents[0];
      p.ensure_grad();
      auto pg = p.mutable_grad();
      auto g = o.grad();
      const size_t base = static_cast<size_t>(row * d);
      for (int j = 0; j < d; ++j) pg[base + j] += g[static_cast<size_t>(j)];
    });
  }
  return out;
}

Tensor slice_cols(const Tensor& x, int c0, int width) {
  require_2d(x, "slice_cols");
  const int n = x.dim(0), d = x.dim(1);
  if (c0 < 0 || width <= 0 || c0 + width > d) throw ContractError("slice_cols: invalid column range");
  const bool rg = want_grad(x);
  Tensor out = Tensor::zeros({n, width}, rg);
  auto xv = x.values();
  auto ov = out.mutable_values();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < width; ++j)
      ov[static_cast<size_t>(i * width + j)] = xv[static_cast<size_t>(i * d + c0 + j)];
  if (rg) {
    attach(out, {x}, [n, d, c0, width](const Tensor& o) {
      Tensor& p = o.node()->parents[0];
      p.ensure_grad();
      auto pg = p.mutable_grad();
      auto g = o.grad();
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < width; ++j)
          pg[static_cast<size_t>(i * d + c0 + j)] += g[static_cast<size_t>(i * width + j)];
    });
  }
  return out;
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ContractError("concat_cols: no parts");
  const int n = parts[0].dim(0);
  int total = 0;
  bool rg = false;
  for (const Tensor& p : parts) {
    require_2d(p, "concat_cols");
    if (p.dim(0) != n) throw ContractError("concat_cols: row counts differ");
    total += p.dim(1);
    rg = rg || want_grad(p);
  }
  Tensor out = Tensor::zeros({n, total}, rg);
  auto ov = out.mutable_values();
  int off = 0;
  for (const Tensor& p : parts) {
    const int w = p.dim(1);
    auto pv = p.values();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < w; ++j)
        ov[static_cast<size_t>(i * total + off + j)] = pv[static_cast<size_t>(i * w + j)];
    off += w;
  }
  if (rg) {
    attach(out, parts, [n, total](const Tensor& o) {
      auto g = o.grad();
      int off = 0;
      for (Tensor& p : o.node()->parents) {
        const int w = p.dim(1);
        if (p.requires_grad()) {
          p.ensure_grad();
          auto pg = p.mutable_grad();
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < w; ++j)
              pg[static_cast<size_t>(i * w + j)] += g[static_cast<size_t>(i * total + off + j)];
        }
        off += w;
      }
    });
  }
  return out;
}

Tensor gelu(const Tensor& x) {
  const bool rg = want_grad(x);
  Tensor out = Tensor::zeros(x.shape(), rg);
  auto xv = x.values();
  auto ov = out.mutable_values();
  for (size_t i = 0; i < ov.size(); ++i) {
    ov[i] = 0.5 * xv[i] * (1.0 + std::erf(xv[i] * kInvSqrt2));
  }
  if (rg) {
    attach(out, {x}, [](const Tensor& o) {
      Tensor& p = o.node()->parents[0];
      p.ensure_grad();
      auto pg = p.mutable_grad();
      auto g = o.grad();
      auto xv = p.values();
      for (size_t i = 0; i < pg.size(); ++i) {
        const double cdf = 0.5 * (1.0 + std::erf(xv[i] * kInvSqrt2));
        const double pdf = kInvSqrt2Pi * std::exp(-0.5 * xv[i] * xv[i]);
        pg[i] += g[i] * (cdf + xv[i] * pdf);
      }
    });
  }
  return out;
}

Tensor cross_entropy(const Tensor& logits, int target) {
  int c = 0;
  if (logits.ndim() == 1) {
    c = logits.dim(0);
  } else if (logits.ndim() == 2 && logits.dim(0) == 1) {
    c = logits.dim(1);
  } else {
    throw ContractError("cross_entropy: logits must be {C} or {1 x C}");
  }
  if (target < 0 || target >= c) throw ContractError("cross_entropy: target class out of range");

  auto xv = logits.values();
  double mx = xv[0];
  for (int j = 1; j < c; ++j) mx = std::max(mx, xv[static_cast<size_t>(j)]);
  double z = 0.0;
  for (int j = 0; j < c; ++j) z += std::exp(xv[static_cast<size_t>(j)] - mx);
  const double log_z = mx + std::log(z);
  const double loss = log_z - xv[static_cast<size_t>(target)];

  const bool rg = want_grad(logits);
  Tensor out = Tensor::from({1}, {loss}, rg);
  if (rg) {
    attach(out, {logits}, [c, target, mx, z](const Tensor& o) {
      Tensor& p = o.node()->parents[0];
      p.ensure_grad();
      auto pg = p.mutable_grad();
      auto xv = p.values();
      const double g = o.grad()[0];
      // d loss / d logits = softmax(logits) - onehot(target)
      for (int j = 0; j < c; ++j) {
        const double soft = std::exp(xv[static_cast<size_t>(j)] - mx) / z;
        pg[static_cast<size_t>(j)] += g * (soft - (j == target ? 1.0 : 0.0));
      }
    });
  }
  return out;
}

Tensor sum(const Tensor& x) {
  const bool rg = want_grad(x);
  double acc = 0.0;
  for (double v : x.values()) acc += v;
  Tensor out = Tensor::from({1}, {acc}, rg);
  if (rg) {
    attach(out, {x}, [](const Tensor& o) {
      Tensor& p = o.node()->parents[0];
      p.ensure_grad();
      auto pg = p.mutable_grad();
      const double g = o.grad()[0];
      for (size_t i = 0; i < pg.size(); ++i) pg[i] += g;
    });
  }
  return out;
}

Tensor mean(const Tensor& x) {
  const bool rg = want_grad(x);
  double acc = 0.0;
  for (double v : x.values()) acc += v;
  const double n = static_cast<double>(x.numel());
  Tensor out = Tensor::from({1}, {acc / n}, rg);
  if (rg) {
    attach(out, {x}, [n](const Tensor& o) {
      Tensor& p = o.node()->parents[0];
      p.ensure_grad();
      auto pg = p.mutable_grad();
      const double g = o.grad()[0] / n;
      for (size_t i = 0; i < pg.size(); ++i) pg[i] += g;
    });
  }
  return out;
}

Tensor mean_of(const std::vector<Tensor>& scalars) {
  if (scalars.empty()) throw ContractError("mean_of: empty batch");
  bool rg = false;
  double acc = 0.0;
  for (const Tensor& s : scalars) {
    if (s.numel() != 1) throw ContractError("mean_of: inputs must be scalars");
    acc += s.at(0);
    rg = rg || want_grad(s);
  }
  const double k = static_cast<double>(scalars.size());
  Tensor out = Tensor::from({1}, {acc / k}, rg);
  if (rg) {
    attach(out, scalars, [k](const Tensor& o) {
      const double g = o.grad()[0] / k;
      for (Tensor& p : o.node()->parents) {
        if (!p.requires_grad()) continue;
        p.ensure_grad();
        p.mutable_grad()[0] += g;
      }
    });
  }
  return out;
}

Tensor min_const(const Tensor& x, double cap) {
  if (x.numel() != 1) throw ContractError("min_const: expected a scalar");
  const bool rg = want_grad(x);
  const double v = x.at(0);
  Tensor out = Tensor::from({1}, {std::min(v, cap)}, rg);
  if (rg) {
    attach(out, {x}, [cap](const Tensor& o) {
      Tensor& p = o.node()->parents[0];
      if (p.at(0) < cap) {
        p.ensure_grad();
        p.mutable_grad()[0] += o.grad()[0];
      }
    });
  }
  return out;
}

namespace {

void check_span(int n, int begin, int end, const char* op) {
  // Any column window of the matrix; the strictly-inside-sentence rule for
  // trigger spans is enforced where examples are tokenized.
  if (begin < 0 || end <= begin || end > n) {
    throw ContractError(std::string(op) + ": span [" + std::to_string(begin) + ", " +
                        std::to_string(end) + ") invalid for sequence length " + std::to_string(n));
  }
}

}  // namespace

Tensor trigger_column_mass(const Tensor& attention, int span_begin, int span_end) {
  require_2d(attention, "trigger_column_mass");
  const int n = attention.dim(0);
  if (attention.dim(1) != n) throw ContractError("trigger_column_mass: matrix must be square");
  check_span(n, span_begin, span_end, "trigger_column_mass");

  const int len = span_end - span_begin;
  const int merged = n - len + 1;
  auto av = attention.values();

  double outside = 0.0, inside = 0.0;
  for (int i = 0; i < n; ++i) {
    double row_mass = 0.0;
    for (int j = span_begin; j < span_end; ++j) row_mass += av[static_cast<size_t>(i * n + j)];
    if (i >= span_begin && i < span_end) {
      inside += row_mass;
    } else {
      outside += row_mass;
    }
  }
  // Span rows collapse to one merged row (their average), span columns sum.
  const double value = (outside + inside / len) / merged;

  const bool rg = want_grad(attention);
  Tensor out = Tensor::from({1}, {value}, rg);
  if (rg) {
    attach(out, {attention}, [n, span_begin, span_end, len, merged](const Tensor& o) {
      Tensor& p = o.node()->parents[0];
      p.ensure_grad();
      auto pg = p.mutable_grad();
      const double g = o.grad()[0];
      for (int i = 0; i < n; ++i) {
        const double w = (i >= span_begin && i < span_end)
                             ? g / (static_cast<double>(merged) * len)
                             : g / merged;
        for (int j = span_begin; j < span_end; ++j) pg[static_cast<size_t>(i * n + j)] += w;
      }
    });
  }
  return out;
}

double trigger_column_mass_value(const std::vector<double>& attention, int n,
                                 int span_begin, int span_end) {
  if (static_cast<size_t>(n) * static_cast<size_t>(n) != attention.size()) {
    throw ContractError("trigger_column_mass_value: matrix size mismatch");
  }
  check_span(n, span_begin, span_end, "trigger_column_mass_value");
  const int len = span_end - span_begin;
  const int merged = n - len + 1;
  double outside = 0.0, inside = 0.0;
  for (int i = 0; i < n; ++i) {
    double row_mass = 0.0;
    for (int j = span_begin; j < span_end; ++j) row_mass += attention[static_cast<size_t>(i * n + j)];
    if (i >= span_begin && i < span_end) {
      inside += row_mass;
    } else {
      outside += row_mass;
    }
  }
  return (outside + inside / len) / merged;
}

}  // namespace attnlab
