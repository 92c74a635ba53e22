#include "lf2w/tape.hpp"

#include <algorithm>
#include <cmath>

namespace lf2w {

namespace {

Vector as_vec(const Matrix& m) {
    Vector v(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) v[i] = m.data()[i];
    return v;
}

Matrix col(const Vector& v) {
    Matrix m(v.len(), 1);
    for (std::size_t i = 0; i < v.len(); ++i) m.data()[i] = v[i];
    return m;
}

} // namespace

Slot Tape::leaf(const Matrix& value, bool requires_grad) {
    (void)requires_grad;  // adjoints are allocated for every slot
    nodes_.push_back(Node{OpId::leaf, {}, 0.0, 0, 0});
    values_.push_back(value);
    return Slot{static_cast<int>(nodes_.size()) - 1};
}

Slot Tape::leaf_vec(const Vector& value, bool requires_grad) {
    return leaf(col(value), requires_grad);
}

double Tape::scalar(Slot s) const {
    const Matrix& m = values_.at(s.idx);
    detail::require(m.size() == 1, "scalar: slot does not hold a 1x1 value");
    return m.data()[0];
}

Slot Tape::record(OpId op, const std::vector<Slot>& inputs, double attr,
                  std::size_t a, std::size_t b) {
    if (op == OpId::leaf) throw capability_error("record: leaf is not a recordable op");
    Node n;
    n.op = op;
    n.in.reserve(inputs.size());
    for (Slot s : inputs) {
        if (!s.valid() || s.idx >= static_cast<int>(nodes_.size()))
            throw shape_error("record: invalid input slot");
        n.in.push_back(s.idx);
    }
    n.attr = attr;
    n.a = a;
    n.b = b;
    values_.push_back(forward_value(n));
    nodes_.push_back(std::move(n));
    return Slot{static_cast<int>(nodes_.size()) - 1};
}

Matrix Tape::forward_value(const Node& n) const {
    auto V = [&](std::size_t i) -> const Matrix& { return values_[n.in[i]]; };
    switch (n.op) {
        case OpId::add: return lf2w::add(V(0), V(1));
        case OpId::sub: return lf2w::sub(V(0), V(1));
        case OpId::mul: return hadamard(V(0), V(1));
        case OpId::scale: {
            detail::require(V(1).size() == 1, "scale: scalar operand must be 1x1");
            return lf2w::scale(V(0), V(1).data()[0]);
        }
        case OpId::cscale: return lf2w::scale(V(0), n.attr);
        case OpId::matmul: return lf2w::matmul(V(0), V(1));
        case OpId::transpose: return lf2w::transpose(V(0));
        case OpId::outer: {
            detail::require(V(0).cols() == 1 && V(1).cols() == 1, "outer: expects column vectors");
            return lf2w::outer(as_vec(V(0)), as_vec(V(1)));
        }
        case OpId::silu: {
            Matrix out = V(0);
            for (std::size_t i = 0; i < out.size(); ++i) {
                const double x = out.data()[i];
                out.data()[i] = x * sigmoid_scalar(x);
            }
            return out;
        }
        case OpId::sigmoid: {
            Matrix out = V(0);
            for (std::size_t i = 0; i < out.size(); ++i)
                out.data()[i] = sigmoid_scalar(out.data()[i]);
            return out;
        }
        case OpId::l2_normalize: {
            const Matrix& x = V(0);
            double nn = 0;
            for (std::size_t i = 0; i < x.size(); ++i) nn += x.data()[i] * x.data()[i];
            const double nrm = std::sqrt(nn);
            const double denom = nrm < n.attr ? n.attr : nrm;
            return lf2w::scale(x, 1.0 / denom);
        }
        case OpId::rmsnorm: {
            const Matrix& x = V(0);
            const Matrix& g = V(1);
            detail::require(x.size() == g.size(), "rmsnorm: gain length mismatch");
            double ms = 0;
            for (std::size_t i = 0; i < x.size(); ++i) ms += x.data()[i] * x.data()[i];
            ms /= static_cast<double>(x.size());
            const double inv = 1.0 / std::sqrt(ms + n.attr);
            Matrix out = x;
            for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = g.data()[i] * x.data()[i] * inv;
            return out;
        }
        case OpId::swiglu: {
            const Matrix& x = V(0);
            detail::require(x.cols() == 1 && x.rows() % 2 == 0, "swiglu: expects even-length column");
            const std::size_t h = x.rows() / 2;
            Matrix out(h, 1);
            for (std::size_t i = 0; i < h; ++i) {
                const double gate = x.data()[i];
                out.data()[i] = gate * sigmoid_scalar(gate) * x.data()[h + i];
            }
            return out;
        }
        case OpId::unit_lower_solve: return lf2w::unit_lower_solve(V(0), V(1));
        case OpId::row_scale: {
            const Matrix& m = V(0);
            const Matrix& v = V(1);
            detail::require(v.cols() == 1 && v.rows() == m.rows(), "row_scale: bad scaling vector");
            Matrix out = m;
            for (std::size_t i = 0; i < m.rows(); ++i)
                for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) *= v(i, 0);
            return out;
        }
        case OpId::stack_rows: {
            detail::require(!n.in.empty(), "stack_rows: no inputs");
            const std::size_t w = V(0).rows();
            Matrix out(n.in.size(), w);
            for (std::size_t r = 0; r < n.in.size(); ++r) {
                const Matrix& v = values_[n.in[r]];
                detail::require(v.cols() == 1 && v.rows() == w, "stack_rows: ragged inputs");
                for (std::size_t j = 0; j < w; ++j) out(r, j) = v(j, 0);
            }
            return out;
        }
        case OpId::vconcat: {
            std::size_t total = 0;
            for (int idx : n.in) {
                detail::require(values_[idx].cols() == 1, "vconcat: expects column vectors");
                total += values_[idx].rows();
            }
            Matrix out(total, 1);
            std::size_t at = 0;
            for (int idx : n.in) {
                const Matrix& v = values_[idx];
                for (std::size_t i = 0; i < v.rows(); ++i) out(at++, 0) = v(i, 0);
            }
            return out;
        }
        case OpId::slice_rows: {
            const Matrix& m = V(0);
            detail::require(n.a + n.b <= m.rows(), "slice_rows: range out of bounds");
            Matrix out(n.b, m.cols());
            for (std::size_t i = 0; i < n.b; ++i)
                for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(n.a + i, j);
            return out;
        }
        case OpId::detach: return V(0);
        case OpId::sse: {
            const Matrix& x = V(0);
            const Matrix& y = V(1);
            detail::require(x.same_shape(y), "sse: shape mismatch");
            double acc = 0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double d = x.data()[i] - y.data()[i];
                acc += d * d;
            }
            Matrix out(1, 1);
            out.data()[0] = acc;
            return out;
        }
        case OpId::decay_ratio: {
            const Matrix& a = V(0);
            detail::require(a.cols() == 1, "decay_ratio: expects column vector");
            const std::size_t c = a.rows();
            Matrix out(c, c);
            for (std::size_t t = 0; t < c; ++t) {
                out(t, t) = 1.0;
                double p = 1.0;
                for (std::size_t s = t; s-- > 0;) {
                    p *= a(s + 1, 0);
                    out(t, s) = p;
                }
            }
            return out;
        }
        case OpId::cumprod: {
            const Matrix& a = V(0);
            detail::require(a.cols() == 1, "cumprod: expects column vector");
            Matrix out(a.rows(), 1);
            double p = 1.0;
            for (std::size_t t = 0; t < a.rows(); ++t) {
                p *= a(t, 0);
                out(t, 0) = p;
            }
            return out;
        }
        default: throw capability_error("record: unsupported operation");
    }
}

void Tape::backward(Slot loss) {
    detail::require(loss.valid() && loss.idx < static_cast<int>(nodes_.size()),
                    "backward: invalid loss slot");
    detail::require(values_[loss.idx].size() == 1, "backward: loss must be scalar");
    adjoints_.assign(values_.size(), Matrix{});
    for (std::size_t i = 0; i < values_.size(); ++i)
        adjoints_[i] = Matrix(values_[i].rows(), values_[i].cols());
    adjoints_[loss.idx].data()[0] = 1.0;
    adjoints_live_ = true;
    for (int i = loss.idx; i >= 0; --i) backward_node(i);
}

void Tape::backward_node(int i) {
    const Node& n = nodes_[i];
    if (n.op == OpId::leaf || n.op == OpId::detach) {
        if (n.op == OpId::detach) return;  // gradient stops here
        return;
    }
    const Matrix& g = adjoints_[i];
    // skip dead branches cheaply
    bool any = false;
    for (std::size_t k = 0; k < g.size() && !any; ++k) any = g.data()[k] != 0.0;
    if (!any) return;

    auto V = [&](std::size_t k) -> const Matrix& { return values_[n.in[k]]; };
    auto A = [&](std::size_t k) -> Matrix& { return adjoints_[n.in[k]]; };

    switch (n.op) {
        case OpId::add:
            for (std::size_t k = 0; k < g.size(); ++k) {
                A(0).data()[k] += g.data()[k];
                A(1).data()[k] += g.data()[k];
            }
            break;
        case OpId::sub:
            for (std::size_t k = 0; k < g.size(); ++k) {
                A(0).data()[k] += g.data()[k];
                A(1).data()[k] -= g.data()[k];
            }
            break;
        case OpId::mul:
            for (std::size_t k = 0; k < g.size(); ++k) {
                A(0).data()[k] += g.data()[k] * V(1).data()[k];
                A(1).data()[k] += g.data()[k] * V(0).data()[k];
            }
            break;
        case OpId::scale: {
            const double s = V(1).data()[0];
            double gs = 0;
            for (std::size_t k = 0; k < g.size(); ++k) {
                A(0).data()[k] += s * g.data()[k];
                gs += g.data()[k] * V(0).data()[k];
            }
            A(1).data()[0] += gs;
            break;
        }
        case OpId::cscale:
            for (std::size_t k = 0; k < g.size(); ++k) A(0).data()[k] += n.attr * g.data()[k];
            break;
        case OpId::matmul: {
            const Matrix ga = lf2w::matmul(g, lf2w::transpose(V(1)));
            const Matrix gb = lf2w::matmul(lf2w::transpose(V(0)), g);
            for (std::size_t k = 0; k < ga.size(); ++k) A(0).data()[k] += ga.data()[k];
            for (std::size_t k = 0; k < gb.size(); ++k) A(1).data()[k] += gb.data()[k];
            break;
        }
        case OpId::transpose: {
            const Matrix gt = lf2w::transpose(g);
            for (std::size_t k = 0; k < gt.size(); ++k) A(0).data()[k] += gt.data()[k];
            break;
        }
        case OpId::outer: {
            // out = u v^T : grad u += G v, grad v += G^T u
            const Matrix& u = V(0);
            const Matrix& v = V(1);
            for (std::size_t r = 0; r < u.rows(); ++r) {
                double acc = 0;
                for (std::size_t c = 0; c < v.rows(); ++c) acc += g(r, c) * v(c, 0);
                A(0)(r, 0) += acc;
            }
            for (std::size_t c = 0; c < v.rows(); ++c) {
                double acc = 0;
                for (std::size_t r = 0; r < u.rows(); ++r) acc += g(r, c) * u(r, 0);
                A(1)(c, 0) += acc;
            }
            break;
        }
        case OpId::silu:
            for (std::size_t k = 0; k < g.size(); ++k) {
                const double x = V(0).data()[k];
                const double s = sigmoid_scalar(x);
                A(0).data()[k] += g.data()[k] * s * (1.0 + x * (1.0 - s));
            }
            break;
        case OpId::sigmoid:
            for (std::size_t k = 0; k < g.size(); ++k) {
                const double y = values_[i].data()[k];
                A(0).data()[k] += g.data()[k] * y * (1.0 - y);
            }
            break;
        case OpId::l2_normalize: {
            const Matrix& x = V(0);
            double nn = 0;
            for (std::size_t k = 0; k < x.size(); ++k) nn += x.data()[k] * x.data()[k];
            const double nrm = std::sqrt(nn);
            if (nrm < n.attr) break;  // guard branch: gradient defined as zero
            const Matrix& y = values_[i];
            double yg = 0;
            for (std::size_t k = 0; k < x.size(); ++k) yg += y.data()[k] * g.data()[k];
            for (std::size_t k = 0; k < x.size(); ++k)
                A(0).data()[k] += (g.data()[k] - y.data()[k] * yg) / nrm;
            break;
        }
        case OpId::rmsnorm: {
            const Matrix& x = V(0);
            const Matrix& gain = V(1);
            const std::size_t len = x.size();
            double ms = 0;
            for (std::size_t k = 0; k < len; ++k) ms += x.data()[k] * x.data()[k];
            ms /= static_cast<double>(len);
            const double r = std::sqrt(ms + n.attr);
            double gsx = 0;  // sum_i g_i * gain_i * x_i
            for (std::size_t k = 0; k < len; ++k) gsx += g.data()[k] * gain.data()[k] * x.data()[k];
            const double r3n = r * r * r * static_cast<double>(len);
            for (std::size_t k = 0; k < len; ++k) {
                A(0).data()[k] += g.data()[k] * gain.data()[k] / r - gsx * x.data()[k] / r3n;
                A(1).data()[k] += g.data()[k] * x.data()[k] / r;
            }
            break;
        }
        case OpId::swiglu: {
            const Matrix& x = V(0);
            const std::size_t h = x.rows() / 2;
            for (std::size_t k = 0; k < h; ++k) {
                const double gate = x.data()[k];
                const double val = x.data()[h + k];
                const double s = sigmoid_scalar(gate);
                A(0).data()[k] += g.data()[k] * val * s * (1.0 + gate * (1.0 - s));
                A(0).data()[h + k] += g.data()[k] * gate * s;
            }
            break;
        }
        case OpId::unit_lower_solve: {
            // X = L^{-1} B ; grad_B = L^{-T} G, grad_L = -grad_B X^T (strict lower only)
            const Matrix gb = unit_lower_transpose_solve(V(0), g);
            const Matrix& x = values_[i];
            for (std::size_t k = 0; k < gb.size(); ++k) A(1).data()[k] += gb.data()[k];
            const std::size_t c = V(0).rows();
            for (std::size_t r = 1; r < c; ++r)
                for (std::size_t s = 0; s < r; ++s) {
                    double acc = 0;
                    for (std::size_t j = 0; j < x.cols(); ++j) acc += gb(r, j) * x(s, j);
                    A(0)(r, s) -= acc;
                }
            break;
        }
        case OpId::row_scale: {
            const Matrix& m = V(0);
            const Matrix& v = V(1);
            for (std::size_t r = 0; r < m.rows(); ++r) {
                double acc = 0;
                for (std::size_t c = 0; c < m.cols(); ++c) {
                    A(0)(r, c) += g(r, c) * v(r, 0);
                    acc += g(r, c) * m(r, c);
                }
                A(1)(r, 0) += acc;
            }
            break;
        }
        case OpId::stack_rows:
            for (std::size_t r = 0; r < n.in.size(); ++r)
                for (std::size_t j = 0; j < g.cols(); ++j) A(r)(j, 0) += g(r, j);
            break;
        case OpId::vconcat: {
            std::size_t at = 0;
            for (std::size_t k = 0; k < n.in.size(); ++k) {
                Matrix& a = A(k);
                for (std::size_t r = 0; r < a.rows(); ++r) a(r, 0) += g(at++, 0);
            }
            break;
        }
        case OpId::slice_rows:
            for (std::size_t r = 0; r < n.b; ++r)
                for (std::size_t j = 0; j < g.cols(); ++j) A(0)(n.a + r, j) += g(r, j);
            break;
        case OpId::sse: {
            const double s = 2.0 * g.data()[0];
            for (std::size_t k = 0; k < V(0).size(); ++k) {
                const double d = V(0).data()[k] - V(1).data()[k];
                A(0).data()[k] += s * d;
                A(1).data()[k] -= s * d;
            }
            break;
        }
        case OpId::decay_ratio: {
            const Matrix& a = V(0);
            const Matrix& rmat = values_[i];
            const std::size_t c = a.rows();
            for (std::size_t r = 1; r < c; ++r) {
                const double ar = a(r, 0);
                double acc = 0;
                for (std::size_t t = r; t < c; ++t)
                    for (std::size_t s = 0; s < r; ++s) {
                        if (g(t, s) == 0.0) continue;
                        double dr;
                        if (std::abs(ar) > 1e-280) {
                            dr = rmat(t, s) / ar;
                        } else {
                            dr = 1.0;  // recompute product excluding r
                            for (std::size_t q = s + 1; q <= t; ++q)
                                if (q != r) dr *= a(q, 0);
                        }
                        acc += g(t, s) * dr;
                    }
                A(0)(r, 0) += acc;
            }
            break;
        }
        case OpId::cumprod: {
            const Matrix& a = V(0);
            const Matrix& p = values_[i];
            const std::size_t c = a.rows();
            for (std::size_t r = 0; r < c; ++r) {
                const double ar = a(r, 0);
                double acc = 0;
                for (std::size_t t = r; t < c; ++t) {
                    if (g(t, 0) == 0.0) continue;
                    double dp;
                    if (std::abs(ar) > 1e-280) {
                        dp = p(t, 0) / ar;
                    } else {
                        dp = 1.0;
                        for (std::size_t q = 0; q <= t; ++q)
                            if (q != r) dp *= a(q, 0);
                    }
                    acc += g(t, 0) * dp;
                }
                A(0)(r, 0) += acc;
            }
            break;
        }
        default: break;
    }
}

void Tape::reset() {
    nodes_.clear();
    values_.clear();
    adjoints_.clear();
    adjoints_live_ = false;
}

// ---- ParamStore ----

void ParamStore::add(const std::string& name, const Matrix& value) {
    detail::require(params_.count(name) == 0, "ParamStore: duplicate name " + name);
    params_.emplace(name, value);
    grads_.emplace(name, Matrix(value.rows(), value.cols()));
}

Matrix& ParamStore::get(const std::string& name) {
    auto it = params_.find(name);
    detail::require(it != params_.end(), "ParamStore: unknown name " + name);
    return it->second;
}

const Matrix& ParamStore::get(const std::string& name) const {
    auto it = params_.find(name);
    detail::require(it != params_.end(), "ParamStore: unknown name " + name);
    return it->second;
}

Matrix& ParamStore::grad(const std::string& name) {
    auto it = grads_.find(name);
    detail::require(it != grads_.end(), "ParamStore: unknown name " + name);
    return it->second;
}

const Matrix& ParamStore::grad(const std::string& name) const {
    auto it = grads_.find(name);
    detail::require(it != grads_.end(), "ParamStore: unknown name " + name);
    return it->second;
}

void ParamStore::zero_grads() {
    for (auto& [k, g] : grads_) g.fill(0.0);
}

std::vector<std::string> ParamStore::names() const {
    std::vector<std::string> out;
    out.reserve(params_.size());
    for (const auto& [k, v] : params_) out.push_back(k);
    return out;
}

void ParamStore::accumulate_grads(const ParamStore& other) {
    for (const auto& name : names()) {
        Matrix& g = grad(name);
        const Matrix& og = other.grad(name);
        detail::require(g.same_shape(og), "accumulate_grads: shape mismatch for " + name);
        for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] += og.data()[i];
    }
}

// ---- finite-difference harness ----

double grad_check(const std::function<double(const ParamStore&)>& loss,
                  ParamStore& params, double h, std::size_t max_coords,
                  std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    double worst = 0.0;
    for (const auto& name : params.names()) {
        Matrix& p = params.get(name);
        const Matrix& an = params.grad(name);
        std::vector<std::size_t> coords(p.size());
        for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
        if (coords.size() > max_coords) {
            std::shuffle(coords.begin(), coords.end(), rng);
            coords.resize(max_coords);
        }
        for (std::size_t c : coords) {
            const double orig = p.data()[c];
            p.data()[c] = orig + h;
            const double up = loss(params);
            p.data()[c] = orig - h;
            const double dn = loss(params);
            p.data()[c] = orig;
            const double fd = (up - dn) / (2.0 * h);
            const double a = an.data()[c];
            const double denom = std::max({std::abs(fd), std::abs(a), 1e-6});
            worst = std::max(worst, std::abs(fd - a) / denom);
        }
    }
    return worst;
}

} // namespace lf2w
