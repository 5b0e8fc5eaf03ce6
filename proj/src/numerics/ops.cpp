#include "dhap/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace dhap::num {
namespace {

void require(bool ok, const char* op, const Tensor& a, const Tensor& b) {
  if (!ok) {
    throw ShapeError(std::string(op) + ": incompatible shapes " + shape_string(a.shape()) + " and " +
                     shape_string(b.shape()));
  }
}

Tape& tape_of(Var a) {
  if (!a.valid()) throw std::invalid_argument("operation on an invalid Var");
  return *a.tape;
}

using Unary = Real (*)(Real);

// Elementwise map whose derivative is expressed through the output value.
template <typename F, typename DF>
Var map_unary(Var a, F f, DF df_from_out) {
  Tape& t = tape_of(a);
  const Tensor& x = a.value();
  Tensor out({x.rows(), x.cols()});
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  return t.record(std::move(out), {a}, [ia = a.id, df_from_out](Tape& tp, std::int32_t self) {
    const Tensor& y = tp.value(self);
    const Tensor& g = tp.grad(self);
    Tensor& ga = tp.grad(ia);
    for (std::size_t i = 0; i < y.size(); ++i) ga[i] += g[i] * df_from_out(y[i]);
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  require(A.cols() == B.rows(), "matmul", A, B);
  const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    Real* o = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const Real aip = A[i * k + p];
      if (aip == Real(0)) continue;
      const Real* brow = B.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) o[j] += aip * brow[j];
    }
  }
  return t.record(std::move(out), {a, b}, [ia = a.id, ib = b.id, m, k, n](Tape& tp, std::int32_t self) {
    const Tensor& G = tp.grad(self);
    if (tp.requires_grad(ia)) {
      const Tensor& B = tp.value(ib);
      Tensor& gA = tp.grad(ia);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          Real s = 0;
          for (std::size_t j = 0; j < n; ++j) s += G[i * n + j] * B[p * n + j];
          gA[i * k + p] += s;
        }
    }
    if (tp.requires_grad(ib)) {
      const Tensor& A = tp.value(ia);
      Tensor& gB = tp.grad(ib);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const Real aip = A[i * k + p];
          if (aip == Real(0)) continue;
          for (std::size_t j = 0; j < n; ++j) gB[p * n + j] += aip * G[i * n + j];
        }
    }
  });
}

Var matmul_nt(Var a, Var b) {
  Tape& t = tape_of(a);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  require(A.cols() == B.cols(), "matmul_nt", A, B);
  const std::size_t m = A.rows(), k = A.cols(), n = B.rows();
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      Real s = 0;
      const Real* ar = A.data() + i * k;
      const Real* br = B.data() + j * k;
      for (std::size_t p = 0; p < k; ++p) s += ar[p] * br[p];
      out[i * n + j] = s;
    }
  return t.record(std::move(out), {a, b}, [ia = a.id, ib = b.id, m, k, n](Tape& tp, std::int32_t self) {
    const Tensor& G = tp.grad(self);
    const bool need_a = tp.requires_grad(ia);
    const bool need_b = tp.requires_grad(ib);
    const Tensor& A = tp.value(ia);
    const Tensor& B = tp.value(ib);
    Tensor* gA = need_a ? &tp.grad(ia) : nullptr;
    Tensor* gB = need_b ? &tp.grad(ib) : nullptr;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const Real g = G[i * n + j];
        if (g == Real(0)) continue;
        if (gA)
          for (std::size_t p = 0; p < k; ++p) (*gA)[i * k + p] += g * B[j * k + p];
        if (gB)
          for (std::size_t p = 0; p < k; ++p) (*gB)[j * k + p] += g * A[i * k + p];
      }
  });
}

Var linear(Var x, Var w, Var b) {
  Tape& t = tape_of(x);
  const Tensor& X = x.value();
  const Tensor& W = w.value();
  require(X.cols() == W.cols(), "linear", X, W);
  const std::size_t n = X.rows(), in = X.cols(), out_dim = W.rows();
  const bool has_bias = b.valid();
  if (has_bias) require(b.value().size() == out_dim, "linear bias", W, b.value());
  Tensor out({n, out_dim});
  for (std::size_t r = 0; r < n; ++r) {
    const Real* xr = X.data() + r * in;
    for (std::size_t o = 0; o < out_dim; ++o) {
      const Real* wr = W.data() + o * in;
      Real s = has_bias ? b.value()[o] : Real(0);
      for (std::size_t p = 0; p < in; ++p) s += xr[p] * wr[p];
      out[r * out_dim + o] = s;
    }
  }
  std::vector<Var> inputs{x, w};
  if (has_bias) inputs.push_back(b);
  return t.record(std::move(out), inputs,
                  [ix = x.id, iw = w.id, ib = b.id, has_bias, n, in, out_dim](Tape& tp, std::int32_t self) {
                    const Tensor& G = tp.grad(self);
                    const Tensor& X = tp.value(ix);
                    const Tensor& W = tp.value(iw);
                    Tensor* gX = tp.requires_grad(ix) ? &tp.grad(ix) : nullptr;
                    Tensor* gW = tp.requires_grad(iw) ? &tp.grad(iw) : nullptr;
                    Tensor* gB = has_bias && tp.requires_grad(ib) ? &tp.grad(ib) : nullptr;
                    for (std::size_t r = 0; r < n; ++r) {
                      const Real* xr = X.data() + r * in;
                      for (std::size_t o = 0; o < out_dim; ++o) {
                        const Real g = G[r * out_dim + o];
                        if (g == Real(0)) continue;
                        if (gB) (*gB)[o] += g;
                        const Real* wr = W.data() + o * in;
                        if (gX) {
                          Real* gx = gX->data() + r * in;
                          for (std::size_t p = 0; p < in; ++p) gx[p] += g * wr[p];
                        }
                        if (gW) {
                          Real* gw = gW->data() + o * in;
                          for (std::size_t p = 0; p < in; ++p) gw[p] += g * xr[p];
                        }
                      }
                    }
                  });
}

Var add(Var a, Var b) {
  Tape& t = tape_of(a);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  require(A.rows() == B.rows() && A.cols() == B.cols(), "add", A, B);
  Tensor out({A.rows(), A.cols()});
  for (std::size_t i = 0; i < A.size(); ++i) out[i] = A[i] + B[i];
  return t.record(std::move(out), {a, b}, [ia = a.id, ib = b.id](Tape& tp, std::int32_t self) {
    const Tensor& G = tp.grad(self);
    for (auto id : {ia, ib}) {
      if (!tp.requires_grad(id)) continue;
      Tensor& g = tp.grad(id);
      for (std::size_t i = 0; i < G.size(); ++i) g[i] += G[i];
    }
  });
}

Var sub(Var a, Var b) {
  Tape& t = tape_of(a);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  require(A.rows() == B.rows() && A.cols() == B.cols(), "sub", A, B);
  Tensor out({A.rows(), A.cols()});
  for (std::size_t i = 0; i < A.size(); ++i) out[i] = A[i] - B[i];
  return t.record(std::move(out), {a, b}, [ia = a.id, ib = b.id](Tape& tp, std::int32_t self) {
    const Tensor& G = tp.grad(self);
    if (tp.requires_grad(ia)) {
      Tensor& g = tp.grad(ia);
      for (std::size_t i = 0; i < G.size(); ++i) g[i] += G[i];
    }
    if (tp.requires_grad(ib)) {
      Tensor& g = tp.grad(ib);
      for (std::size_t i = 0; i < G.size(); ++i) g[i] -= G[i];
    }
  });
}

Var mul(Var a, Var b) {
  Tape& t = tape_of(a);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  require(A.rows() == B.rows() && A.cols() == B.cols(), "mul", A, B);
  Tensor out({A.rows(), A.cols()});
  for (std::size_t i = 0; i < A.size(); ++i) out[i] = A[i] * B[i];
  return t.record(std::move(out), {a, b}, [ia = a.id, ib = b.id](Tape& tp, std::int32_t self) {
    const Tensor& G = tp.grad(self);
    if (tp.requires_grad(ia)) {
      const Tensor& B = tp.value(ib);
      Tensor& g = tp.grad(ia);
      for (std::size_t i = 0; i < G.size(); ++i) g[i] += G[i] * B[i];
    }
    if (tp.requires_grad(ib)) {
      const Tensor& A = tp.value(ia);
      Tensor& g = tp.grad(ib);
      for (std::size_t i = 0; i < G.size(); ++i) g[i] += G[i] * A[i];
    }
  });
}

Var add_row(Var a, Var row) {
  Tape& t = tape_of(a);
  const Tensor& A = a.value();
  const Tensor& R = row.value();
  require(R.size() == A.cols(), "add_row", A, R);
  const std::size_t m = A.rows(), n = A.cols();
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = A[i * n + j] + R[j];
  return t.record(std::move(out), {a, row}, [ia = a.id, ir = row.id, m, n](Tape& tp, std::int32_t self) {
    const Tensor& G = tp.grad(self);
    if (tp.requires_grad(ia)) {
      Tensor& g = tp.grad(ia);
      for (std::size_t i = 0; i < G.size(); ++i) g[i] += G[i];
    }
    if (tp.requires_grad(ir)) {
      Tensor& g = tp.grad(ir);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) g[j] += G[i * n + j];
    }
  });
}

Var scale(Var a, Real s) {
  Tape& t = tape_of(a);
  const Tensor& A = a.value();
  Tensor out({A.rows(), A.cols()});
  for (std::size_t i = 0; i < A.size(); ++i) out[i] = A[i] * s;
  return t.record(std::move(out), {a}, [ia = a.id, s](Tape& tp, std::int32_t self) {
    const Tensor& G = tp.grad(self);
    Tensor& g = tp.grad(ia);
    for (std::size_t i = 0; i < G.size(); ++i) g[i] += G[i] * s;
  });
}

Var one_minus(Var a) {
  Tape& t = tape_of(a);
  const Tensor& A = a.value();
  Tensor out({A.rows(), A.cols()});
  for (std::size_t i = 0; i < A.size(); ++i) out[i] = Real(1) - A[i];
  return t.record(std::move(out), {a}, [ia = a.id](Tape& tp, std::int32_t self) {
    const Tensor& G = tp.grad(self);
    Tensor& g = tp.grad(ia);
    for (std::size_t i = 0; i < G.size(); ++i) g[i] -= G[i];
  });
}

Var tanh(Var a) {
  return map_unary(
      a, [](Real x) { return std::tanh(x); }, [](Real y) { return Real(1) - y * y; });
}

Var sigmoid(Var a) {
  return map_unary(
      a,
      [](Real x) {
        if (x >= 0) return Real(1) / (Real(1) + std::exp(-x));
        const Real e = std::exp(x);
        return e / (Real(1) + e);
      },
      [](Real y) { return y * (Real(1) - y); });
}

Var relu(Var a) {
  return map_unary(
      a, [](Real x) { return x > 0 ? x : Real(0); }, [](Real y) { return y > 0 ? Real(1) : Real(0); });
}

Var log(Var a) {
  Tape& t = tape_of(a);
  const Tensor& A = a.value();
  Tensor out({A.rows(), A.cols()});
  for (std::size_t i = 0; i < A.size(); ++i) out[i] = std::log(A[i]);
  return t.record(std::move(out), {a}, [ia = a.id](Tape& tp, std::int32_t self) {
    const Tensor& G = tp.grad(self);
    const Tensor& A = tp.value(ia);
    Tensor& g = tp.grad(ia);
    for (std::size_t i = 0; i < G.size(); ++i) g[i] += G[i] / A[i];
  });
}

Var clamp_min(Var a, Real floor) {
  Tape& t = tape_of(a);
  const Tensor& A = a.value();
  Tensor out({A.rows(), A.cols()});
  for (std::size_t i = 0; i < A.size(); ++i) out[i] = std::max(A[i], floor);
  return t.record(std::move(out), {a}, [ia = a.id, floor](Tape& tp, std::int32_t self) {
    const Tensor& G = tp.grad(self);
    const Tensor& A = tp.value(ia);
    Tensor& g = tp.grad(ia);
    for (std::size_t i = 0; i < G.size(); ++i)
      if (A[i] > floor) g[i] += G[i];
  });
}

Var softmax(Var logits, const Mask* mask) {
  Tape& t = tape_of(logits);
  const Tensor& X = logits.value();
  const std::size_t m = X.rows(), n = X.cols();
  if (mask && mask->size() != n) {
    throw ShapeError("softmax: mask length " + std::to_string(mask->size()) + " != row width " +
                     std::to_string(n));
  }
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    const Real* x = X.data() + i * n;
    Real* y = out.data() + i * n;
    Real mx = -std::numeric_limits<Real>::infinity();
    bool any = false;
    for (std::size_t j = 0; j < n; ++j) {
      if (mask && !(*mask)[j]) continue;
      any = true;
      mx = std::max(mx, x[j]);
    }
    if (!any) throw std::invalid_argument("softmax: every position of a row is masked");
    Real z = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (mask && !(*mask)[j]) continue;
      y[j] = std::exp(x[j] - mx);
      z += y[j];
    }
    for (std::size_t j = 0; j < n; ++j) y[j] /= z;
  }
  return t.record(std::move(out), {logits}, [ix = logits.id, m, n](Tape& tp, std::int32_t self) {
    const Tensor& G = tp.grad(self);
    const Tensor& Y = tp.value(self);
    Tensor& gX = tp.grad(ix);
    for (std::size_t i = 0; i < m; ++i) {
      Real dot = 0;
      for (std::size_t j = 0; j < n; ++j) dot += G[i * n + j] * Y[i * n + j];
      for (std::size_t j = 0; j < n; ++j) gX[i * n + j] += Y[i * n + j] * (G[i * n + j] - dot);
    }
  });
}

Var layer_norm(Var x, Var gain, Var bias, Real eps) {
  Tape& t = tape_of(x);
  const Tensor& X = x.value();
  const std::size_t m = X.rows(), n = X.cols();
  if (gain.value().size() != n || bias.value().size() != n) {
    throw ShapeError("layer_norm: gain/bias width must equal " + std::to_string(n));
  }
  if (n < 2) throw ShapeError("layer_norm: normalized width must be at least 2");
  const Tensor& Gn = gain.value();
  const Tensor& Bn = bias.value();
  Tensor out({m, n});
  Tensor xhat({m, n});
  std::vector<Real> inv_std(m);
  for (std::size_t i = 0; i < m; ++i) {
    const Real* xr = X.data() + i * n;
    Real mean = 0;
    for (std::size_t j = 0; j < n; ++j) mean += xr[j];
    mean /= static_cast<Real>(n);
    Real var = 0;
    for (std::size_t j = 0; j < n; ++j) var += (xr[j] - mean) * (xr[j] - mean);
    var /= static_cast<Real>(n);
    inv_std[i] = Real(1) / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      const Real h = (xr[j] - mean) * inv_std[i];
      xhat[i * n + j] = h;
      out[i * n + j] = Gn[j] * h + Bn[j];
    }
  }
  return t.record(std::move(out), {x, gain, bias},
                  [ix = x.id, ig = gain.id, ib = bias.id, m, n, xhat = std::move(xhat),
                   inv_std = std::move(inv_std)](Tape& tp, std::int32_t self) {
                    const Tensor& G = tp.grad(self);
                    const Tensor& Gn = tp.value(ig);
                    if (tp.requires_grad(ig)) {
                      Tensor& gg = tp.grad(ig);
                      for (std::size_t i = 0; i < m; ++i)
                        for (std::size_t j = 0; j < n; ++j) gg[j] += G[i * n + j] * xhat[i * n + j];
                    }
                    if (tp.requires_grad(ib)) {
                      Tensor& gb = tp.grad(ib);
                      for (std::size_t i = 0; i < m; ++i)
                        for (std::size_t j = 0; j < n; ++j) gb[j] += G[i * n + j];
                    }
                    if (tp.requires_grad(ix)) {
                      Tensor& gx = tp.grad(ix);
                      const Real inv_n = Real(1) / static_cast<Real>(n);
                      for (std::size_t i = 0; i < m; ++i) {
                        Real mean_d = 0, mean_dx = 0;
                        for (std::size_t j = 0; j < n; ++j) {
                          const Real d = G[i * n + j] * Gn[j];
                          mean_d += d;
                          mean_dx += d * xhat[i * n + j];
                        }
                        mean_d *= inv_n;
                        mean_dx *= inv_n;
                        for (std::size_t j = 0; j < n; ++j) {
                          const Real d = G[i * n + j] * Gn[j];
                          gx[i * n + j] += inv_std[i] * (d - mean_d - xhat[i * n + j] * mean_dx);
                        }
                      }
                    }
                  });
}

Var dropout(Var a, Real rate) {
  Tape& t = tape_of(a);
  if (!t.training() || rate <= Real(0)) return a;
  const Tensor& A = a.value();
  const Real keep_scale = Real(1) / (Real(1) - rate);
  Tensor keep({A.rows(), A.cols()});
  Tensor out({A.rows(), A.cols()});
  for (std::size_t i = 0; i < A.size(); ++i) {
    keep[i] = t.rng().uniform() >= static_cast<double>(rate) ? keep_scale : Real(0);
    out[i] = A[i] * keep[i];
  }
  return t.record(std::move(out), {a}, [ia = a.id, keep = std::move(keep)](Tape& tp, std::int32_t self) {
    const Tensor& G = tp.grad(self);
    Tensor& g = tp.grad(ia);
    for (std::size_t i = 0; i < G.size(); ++i) g[i] += G[i] * keep[i];
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  Tape& t = tape_of(parts[0]);
  const std::size_t m = parts[0].rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const Var& p : parts) {
    if (p.rows() != m) throw ShapeError("concat_cols: row counts differ");
    widths.push_back(p.cols());
    total += p.cols();
  }
  Tensor out({m, total});
  std::size_t off = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& P = parts[k].value();
    for (std::size_t i = 0; i < m; ++i)
      std::copy_n(P.data() + i * widths[k], widths[k], out.data() + i * total + off);
    off += widths[k];
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  std::vector<std::int32_t> ids;
  for (const Var& p : parts) ids.push_back(p.id);
  return t.record(std::move(out), inputs,
                  [ids = std::move(ids), widths = std::move(widths), m, total](Tape& tp, std::int32_t self) {
                    const Tensor& G = tp.grad(self);
                    std::size_t off = 0;
                    for (std::size_t k = 0; k < ids.size(); ++k) {
                      if (tp.requires_grad(ids[k])) {
                        Tensor& g = tp.grad(ids[k]);
                        for (std::size_t i = 0; i < m; ++i)
                          for (std::size_t j = 0; j < widths[k]; ++j) g[i * widths[k] + j] += G[i * total + off + j];
                      }
                      off += widths[k];
                    }
                  });
}

Var concat_cols(std::initializer_list<Var> parts) {
  return concat_cols(std::span<const Var>(parts.begin(), parts.size()));
}

Var slice_cols(Var a, std::size_t start, std::size_t len) {
  Tape& t = tape_of(a);
  const Tensor& A = a.value();
  const std::size_t m = A.rows(), n = A.cols();
  if (start + len > n) throw ShapeError("slice_cols: range exceeds width " + std::to_string(n));
  Tensor out({m, len});
  for (std::size_t i = 0; i < m; ++i) std::copy_n(A.data() + i * n + start, len, out.data() + i * len);
  return t.record(std::move(out), {a}, [ia = a.id, m, n, start, len](Tape& tp, std::int32_t self) {
    const Tensor& G = tp.grad(self);
    Tensor& g = tp.grad(ia);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < len; ++j) g[i * n + start + j] += G[i * len + j];
  });
}

Var slice_rows(Var a, std::size_t start, std::size_t len) {
  Tape& t = tape_of(a);
  const Tensor& A = a.value();
  const std::size_t m = A.rows(), n = A.cols();
  if (start + len > m) throw ShapeError("slice_rows: range exceeds row count " + std::to_string(m));
  Tensor out({len, n});
  std::copy_n(A.data() + start * n, len * n, out.data());
  return t.record(std::move(out), {a}, [ia = a.id, n, start, len](Tape& tp, std::int32_t self) {
    const Tensor& G = tp.grad(self);
    Tensor& g = tp.grad(ia);
    for (std::size_t k = 0; k < len * n; ++k) g[start * n + k] += G[k];
  });
}

Var stack_rows(std::span<const Var> rows) {
  if (rows.empty()) throw std::invalid_argument("stack_rows: no inputs");
  Tape& t = tape_of(rows[0]);
  const std::size_t n = rows[0].cols();
  std::vector<std::size_t> counts;
  std::size_t total = 0;
  for (const Var& r : rows) {
    if (r.cols() != n) throw ShapeError("stack_rows: widths differ");
    counts.push_back(r.rows());
    total += r.rows();
  }
  Tensor out({total, n});
  std::size_t off = 0;
  for (const Var& r : rows) {
    std::copy_n(r.value().data(), r.value().size(), out.data() + off * n);
    off += r.rows();
  }
  std::vector<Var> inputs(rows.begin(), rows.end());
  std::vector<std::int32_t> ids;
  for (const Var& r : rows) ids.push_back(r.id);
  return t.record(std::move(out), inputs,
                  [ids = std::move(ids), counts = std::move(counts), n](Tape& tp, std::int32_t self) {
                    const Tensor& G = tp.grad(self);
                    std::size_t off = 0;
                    for (std::size_t k = 0; k < ids.size(); ++k) {
                      if (tp.requires_grad(ids[k])) {
                        Tensor& g = tp.grad(ids[k]);
                        for (std::size_t q = 0; q < counts[k] * n; ++q) g[q] += G[off * n + q];
                      }
                      off += counts[k];
                    }
                  });
}

Var sum_rows(Var a) {
  Tape& t = tape_of(a);
  const Tensor& A = a.value();
  const std::size_t m = A.rows(), n = A.cols();
  Tensor out({1, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j] += A[i * n + j];
  return t.record(std::move(out), {a}, [ia = a.id, m, n](Tape& tp, std::int32_t self) {
    const Tensor& G = tp.grad(self);
    Tensor& g = tp.grad(ia);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) g[i * n + j] += G[j];
  });
}

Var mean_rows(Var a) {
  const std::size_t m = a.rows();
  return scale(sum_rows(a), Real(1) / static_cast<Real>(m));
}

Var embedding(Var table, std::span<const int> ids) {
  Tape& t = tape_of(table);
  const Tensor& T = table.value();
  const std::size_t rows = T.rows(), n = T.cols();
  Tensor out({ids.size(), n});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= rows) {
      throw std::out_of_range("embedding: id " + std::to_string(ids[i]) + " outside table of " +
                              std::to_string(rows) + " rows");
    }
    std::copy_n(T.data() + static_cast<std::size_t>(ids[i]) * n, n, out.data() + i * n);
  }
  return t.record(std::move(out), {table},
                  [it = table.id, idv = std::vector<int>(ids.begin(), ids.end()), n](Tape& tp, std::int32_t self) {
                    const Tensor& G = tp.grad(self);
                    Tensor& g = tp.grad(it);
                    for (std::size_t i = 0; i < idv.size(); ++i) {
                      Real* dst = g.data() + static_cast<std::size_t>(idv[i]) * n;
                      for (std::size_t j = 0; j < n; ++j) dst[j] += G[i * n + j];
                    }
                  });
}

Var element(Var a, std::size_t r, std::size_t c) {
  Tape& t = tape_of(a);
  const Tensor& A = a.value();
  if (r >= A.rows() || c >= A.cols()) throw ShapeError("element: index out of range");
  const std::size_t flat = r * A.cols() + c;
  return t.record(Tensor({1, 1}, std::vector<Real>{A[flat]}), {a}, [ia = a.id, flat](Tape& tp, std::int32_t self) {
    tp.grad(ia)[flat] += tp.grad(self)[0];
  });
}

Var sum(Var a) {
  Tape& t = tape_of(a);
  const Tensor& A = a.value();
  Real s = 0;
  for (std::size_t i = 0; i < A.size(); ++i) s += A[i];
  return t.record(Tensor({1, 1}, std::vector<Real>{s}), {a}, [ia = a.id](Tape& tp, std::int32_t self) {
    const Real g = tp.grad(self)[0];
    Tensor& ga = tp.grad(ia);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
  });
}

Var sum_at(Var a, std::span<const std::size_t> indices) {
  Tape& t = tape_of(a);
  const Tensor& A = a.value();
  Real s = 0;
  for (std::size_t k : indices) {
    if (k >= A.size()) throw ShapeError("sum_at: index out of range");
    s += A[k];
  }
  return t.record(Tensor({1, 1}, std::vector<Real>{s}), {a},
                  [ia = a.id, idx = std::vector<std::size_t>(indices.begin(), indices.end())](Tape& tp,
                                                                                               std::int32_t self) {
                    const Real g = tp.grad(self)[0];
                    Tensor& ga = tp.grad(ia);
                    for (std::size_t k : idx) ga[k] += g;
                  });
}

}  // namespace dhap::num
