#include "lexpred/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "lexpred/kernels.hpp"

namespace lexpred::ad {

Tensor::Tensor(std::vector<size_t> s, double fill) : shape(std::move(s)) {
    size_t n = 1;
    for (size_t d : shape) n *= d;
    data.assign(n, fill);
}

Tensor Tensor::scalar(double v) {
    Tensor t;
    t.data = {v};
    return t;
}

Tensor Tensor::from(std::vector<size_t> s, std::vector<double> values) {
    Tensor t;
    t.shape = std::move(s);
    size_t n = 1;
    for (size_t d : t.shape) n *= d;
    if (values.size() != n) {
        throw ShapeError("tensor data size " + std::to_string(values.size()) +
                         " does not fill shape " + Tensor{t.shape, 0.0}.shape_str());
    }
    t.data = std::move(values);
    return t;
}

std::string Tensor::shape_str() const {
    std::ostringstream out;
    out << "[";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) out << ",";
        out << shape[i];
    }
    out << "]";
    return out.str();
}

bool Tensor::finite() const {
    return std::all_of(data.begin(), data.end(), [](double v) { return std::isfinite(v); });
}

namespace {

double sigmoid(double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

[[noreturn]] void shape_fail(const std::string& op, const Tensor& a, const Tensor& b) {
    throw ShapeError(op + ": incompatible shapes " + a.shape_str() + " and " + b.shape_str());
}

}  // namespace

Value Tape::leaf(Tensor t, bool requires_grad) {
    Node n;
    n.value = std::move(t);
    n.requires_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return Value{nodes_.size() - 1};
}

Value Tape::push(Tensor value, std::initializer_list<Value> parents) {
    Node n;
    n.value = std::move(value);
    for (Value p : parents) {
        if (nodes_.at(p.id).requires_grad) n.requires_grad = true;
    }
    nodes_.push_back(std::move(n));
    return Value{nodes_.size() - 1};
}

Value Tape::dense(Value x, Value w, Value b) {
    const Tensor& xv = val(x);
    const Tensor& wv = val(w);
    const Tensor& bv = val(b);
    if (xv.rank() != 2 || wv.rank() != 2 || xv.dim(1) != wv.dim(0)) shape_fail("dense", xv, wv);
    if (bv.rank() != 1 || bv.dim(0) != wv.dim(1)) shape_fail("dense bias", bv, wv);
    const size_t batch = xv.dim(0), in = xv.dim(1), out = wv.dim(1);

    Tensor y({batch, out});
    for (size_t i = 0; i < batch; ++i) {
        std::copy(bv.data.begin(), bv.data.end(), y.data.begin() + i * out);
    }
    kernels::gemm_accum(y.data.data(), xv.data.data(), wv.data.data(), batch, in, out);

    Value yv = push(std::move(y), {x, w, b});
    node(yv).back = [this, yv, x, w, b, batch, in, out]() {
        const double* dy = grad(yv).data.data();
        const double* xd = val(x).data.data();
        const double* wd = val(w).data.data();
        double* dx = grad_mut(x).data.data();
        double* dw = grad_mut(w).data.data();
        double* db = grad_mut(b).data.data();
        for (size_t i = 0; i < batch; ++i) {
            const double* dyr = dy + i * out;
            for (size_t k = 0; k < in; ++k) {
                dx[i * in + k] += kernels::dot(dyr, wd + k * out, out);
                kernels::axpy(dw + k * out, xd[i * in + k], dyr, out);
            }
            kernels::add(db, dyr, out);
        }
    };
    return yv;
}

Value Tape::conv1d(Value x, Value w, Value b, size_t width) {
    const Tensor& xv = val(x);
    const Tensor& wv = val(w);
    const Tensor& bv = val(b);
    if (xv.rank() != 3) throw ShapeError("conv1d: input must be [batch,len,emb], got " + xv.shape_str());
    const size_t batch = xv.dim(0), len = xv.dim(1), emb = xv.dim(2);
    if (wv.rank() != 2 || wv.dim(1) != width * emb) shape_fail("conv1d filters", wv, xv);
    const size_t channels = wv.dim(0);
    if (bv.rank() != 1 || bv.dim(0) != channels) shape_fail("conv1d bias", bv, wv);
    if (len < width) {
        throw ShapeError("conv1d: sequence length " + std::to_string(len) +
                         " is shorter than filter width " + std::to_string(width));
    }
    const size_t out_len = len - width + 1;
    const size_t wsz = width * emb;

    Tensor y({batch, out_len, channels});
    for (size_t i = 0; i < batch; ++i) {
        for (size_t t = 0; t < out_len; ++t) {
            const double* window = xv.data.data() + (i * len + t) * emb;
            double* yrow = y.data.data() + (i * out_len + t) * channels;
            for (size_t c = 0; c < channels; ++c) {
                yrow[c] = kernels::dot(window, wv.data.data() + c * wsz, wsz) + bv.data[c];
            }
        }
    }

    Value yv = push(std::move(y), {x, w, b});
    node(yv).back = [this, yv, x, w, b, batch, len, emb, out_len, channels, wsz]() {
        const double* dy = grad(yv).data.data();
        const double* xd = val(x).data.data();
        const double* wd = val(w).data.data();
        double* dx = grad_mut(x).data.data();
        double* dw = grad_mut(w).data.data();
        double* db = grad_mut(b).data.data();
        for (size_t i = 0; i < batch; ++i) {
            for (size_t t = 0; t < out_len; ++t) {
                const double* window = xd + (i * len + t) * emb;
                double* dwindow = dx + (i * len + t) * emb;
                const double* dyr = dy + (i * out_len + t) * channels;
                for (size_t c = 0; c < channels; ++c) {
                    const double g = dyr[c];
                    if (g == 0.0) continue;
                    kernels::axpy(dwindow, g, wd + c * wsz, wsz);
                    kernels::axpy(dw + c * wsz, g, window, wsz);
                    db[c] += g;
                }
            }
        }
    };
    return yv;
}

Value Tape::relu(Value x) {
    Tensor y = val(x);
    for (double& v : y.data) v = std::max(0.0, v);
    Value yv = push(std::move(y), {x});
    node(yv).back = [this, yv, x]() {
        const Tensor& xv = val(x);
        const double* dy = grad(yv).data.data();
        double* dx = grad_mut(x).data.data();
        for (size_t i = 0; i < xv.size(); ++i) {
            if (xv.data[i] > 0.0) dx[i] += dy[i];
        }
    };
    return yv;
}

Value Tape::global_max_pool(Value x) {
    const Tensor& xv = val(x);
    if (xv.rank() != 3) throw ShapeError("global_max_pool: input must be [batch,len,ch], got " + xv.shape_str());
    const size_t batch = xv.dim(0), len = xv.dim(1), ch = xv.dim(2);
    if (len < 1) throw ShapeError("global_max_pool: empty sequence");

    Tensor y({batch, ch});
    Tensor argmax({batch, ch});
    for (size_t i = 0; i < batch; ++i) {
        for (size_t c = 0; c < ch; ++c) {
            double best = xv.data[(i * len) * ch + c];
            size_t best_t = 0;
            for (size_t t = 1; t < len; ++t) {
                double v = xv.data[(i * len + t) * ch + c];
                if (v > best) {  // strict: first maximum wins ties
                    best = v;
                    best_t = t;
                }
            }
            y.data[i * ch + c] = best;
            argmax.data[i * ch + c] = static_cast<double>(best_t);
        }
    }

    Value yv = push(std::move(y), {x});
    node(yv).saved.push_back(std::move(argmax));
    node(yv).back = [this, yv, x, batch, len, ch]() {
        const Tensor& am = node(yv).saved[0];
        const double* dy = grad(yv).data.data();
        double* dx = grad_mut(x).data.data();
        for (size_t i = 0; i < batch; ++i) {
            for (size_t c = 0; c < ch; ++c) {
                size_t t = static_cast<size_t>(am.data[i * ch + c]);
                dx[(i * len + t) * ch + c] += dy[i * ch + c];
            }
        }
    };
    return yv;
}

Value Tape::lstm(Value x, Value wx, Value wh, Value b) {
    const Tensor& xv = val(x);
    const Tensor& wxv = val(wx);
    const Tensor& whv = val(wh);
    const Tensor& bv = val(b);
    if (xv.rank() != 3) throw ShapeError("lstm: input must be [batch,len,in], got " + xv.shape_str());
    const size_t batch = xv.dim(0), len = xv.dim(1), in = xv.dim(2);
    if (wxv.rank() != 2 || wxv.dim(0) != in || wxv.dim(1) % 4 != 0) shape_fail("lstm wx", wxv, xv);
    const size_t hidden = wxv.dim(1) / 4;
    if (whv.rank() != 2 || whv.dim(0) != hidden || whv.dim(1) != 4 * hidden) shape_fail("lstm wh", whv, wxv);
    if (bv.rank() != 1 || bv.dim(0) != 4 * hidden) shape_fail("lstm bias", bv, wxv);
    const size_t H = hidden, H4 = 4 * hidden;

    Tensor h({batch, len, H});
    // caches: gates i,f,g,o and c, tanh(c), all [len,batch,H]
    Tensor ci({len, batch, H}), cf({len, batch, H}), cg({len, batch, H}), co({len, batch, H});
    Tensor cc({len, batch, H}), cth({len, batch, H});

    std::vector<double> z(batch * H4);
    std::vector<double> c_prev(batch * H, 0.0), h_prev(batch * H, 0.0);
    for (size_t t = 0; t < len; ++t) {
        for (size_t i = 0; i < batch; ++i) {
            std::copy(bv.data.begin(), bv.data.end(), z.begin() + i * H4);
        }
        for (size_t i = 0; i < batch; ++i) {
            double* zr = z.data() + i * H4;
            const double* xr = xv.data.data() + (i * len + t) * in;
            for (size_t k = 0; k < in; ++k) {
                kernels::axpy(zr, xr[k], wxv.data.data() + k * H4, H4);
            }
            const double* hp = h_prev.data() + i * H;
            for (size_t k = 0; k < H; ++k) {
                kernels::axpy(zr, hp[k], whv.data.data() + k * H4, H4);
            }
        }
        for (size_t i = 0; i < batch; ++i) {
            const double* zr = z.data() + i * H4;
            const size_t base = (t * batch + i) * H;
            for (size_t k = 0; k < H; ++k) {
                const double gi = sigmoid(zr[k]);
                const double gf = sigmoid(zr[H + k]);
                const double gg = std::tanh(zr[2 * H + k]);
                const double go = sigmoid(zr[3 * H + k]);
                const double c = gf * c_prev[i * H + k] + gi * gg;
                const double th = std::tanh(c);
                ci.data[base + k] = gi;
                cf.data[base + k] = gf;
                cg.data[base + k] = gg;
                co.data[base + k] = go;
                cc.data[base + k] = c;
                cth.data[base + k] = th;
                c_prev[i * H + k] = c;
                const double hv = go * th;
                h_prev[i * H + k] = hv;
                h.data[(i * len + t) * H + k] = hv;
            }
        }
    }

    Value hv = push(std::move(h), {x, wx, wh, b});
    Node& n = node(hv);
    n.saved.push_back(std::move(ci));
    n.saved.push_back(std::move(cf));
    n.saved.push_back(std::move(cg));
    n.saved.push_back(std::move(co));
    n.saved.push_back(std::move(cc));
    n.saved.push_back(std::move(cth));
    n.back = [this, hv, x, wx, wh, b, batch, len, in, H, H4]() {
        const Tensor& ci = node(hv).saved[0];
        const Tensor& cf = node(hv).saved[1];
        const Tensor& cg = node(hv).saved[2];
        const Tensor& co = node(hv).saved[3];
        const Tensor& cc = node(hv).saved[4];
        const Tensor& cth = node(hv).saved[5];
        const Tensor& hval = val(hv);
        const Tensor& xval = val(x);
        const double* dy = grad(hv).data.data();
        double* dx = grad_mut(x).data.data();
        double* dwx = grad_mut(wx).data.data();
        double* dwh = grad_mut(wh).data.data();
        double* db = grad_mut(b).data.data();
        const double* wxd = val(wx).data.data();
        const double* whd = val(wh).data.data();

        std::vector<double> dh(batch * H, 0.0), dc(batch * H, 0.0), dz(batch * H4);
        for (size_t t = len; t-- > 0;) {
            for (size_t i = 0; i < batch; ++i) {
                const size_t base = (t * batch + i) * H;
                double* dzr = dz.data() + i * H4;
                for (size_t k = 0; k < H; ++k) {
                    const double gi = ci.data[base + k], gf = cf.data[base + k];
                    const double gg = cg.data[base + k], go = co.data[base + k];
                    const double th = cth.data[base + k];
                    const double c_prev_v =
                        t > 0 ? cc.data[((t - 1) * batch + i) * H + k] : 0.0;
                    double dht = dh[i * H + k] + dy[(i * len + t) * H + k];
                    double dct = dc[i * H + k] + dht * go * (1.0 - th * th);
                    const double dgo = dht * th;
                    const double dgi = dct * gg;
                    const double dgg = dct * gi;
                    const double dgf = dct * c_prev_v;
                    dc[i * H + k] = dct * gf;  // flows to t-1
                    dzr[k] = dgi * gi * (1.0 - gi);
                    dzr[H + k] = dgf * gf * (1.0 - gf);
                    dzr[2 * H + k] = dgg * (1.0 - gg * gg);
                    dzr[3 * H + k] = dgo * go * (1.0 - go);
                }
            }
            for (size_t i = 0; i < batch; ++i) {
                const double* dzr = dz.data() + i * H4;
                kernels::add(db, dzr, H4);
                const double* xr = xval.data.data() + (i * len + t) * in;
                double* dxr = dx + (i * len + t) * in;
                for (size_t k = 0; k < in; ++k) {
                    kernels::axpy(dwx + k * H4, xr[k], dzr, H4);
                    dxr[k] += kernels::dot(dzr, wxd + k * H4, H4);
                }
                for (size_t k = 0; k < H; ++k) {
                    const double hp =
                        t > 0 ? hval.data[(i * len + (t - 1)) * H + k] : 0.0;
                    kernels::axpy(dwh + k * H4, hp, dzr, H4);
                    dh[i * H + k] = kernels::dot(dzr, whd + k * H4, H4);
                }
            }
        }
    };
    return hv;
}

Value Tape::reverse_time(Value x) {
    const Tensor& xv = val(x);
    if (xv.rank() != 3) throw ShapeError("reverse_time: input must be rank 3, got " + xv.shape_str());
    const size_t batch = xv.dim(0), len = xv.dim(1), f = xv.dim(2);
    Tensor y(xv.shape);
    for (size_t i = 0; i < batch; ++i) {
        for (size_t t = 0; t < len; ++t) {
            std::copy_n(xv.data.data() + (i * len + t) * f, f,
                        y.data.data() + (i * len + (len - 1 - t)) * f);
        }
    }
    Value yv = push(std::move(y), {x});
    node(yv).back = [this, yv, x, batch, len, f]() {
        const double* dy = grad(yv).data.data();
        double* dx = grad_mut(x).data.data();
        for (size_t i = 0; i < batch; ++i) {
            for (size_t t = 0; t < len; ++t) {
                kernels::add(dx + (i * len + t) * f, dy + (i * len + (len - 1 - t)) * f, f);
            }
        }
    };
    return yv;
}

Value Tape::take_timestep(Value x, size_t t) {
    const Tensor& xv = val(x);
    if (xv.rank() != 3) throw ShapeError("take_timestep: input must be rank 3, got " + xv.shape_str());
    const size_t batch = xv.dim(0), len = xv.dim(1), f = xv.dim(2);
    if (t >= len) throw ShapeError("take_timestep: index " + std::to_string(t) + " out of " + xv.shape_str());
    Tensor y({batch, f});
    for (size_t i = 0; i < batch; ++i) {
        std::copy_n(xv.data.data() + (i * len + t) * f, f, y.data.data() + i * f);
    }
    Value yv = push(std::move(y), {x});
    node(yv).back = [this, yv, x, t, batch, len, f]() {
        const double* dy = grad(yv).data.data();
        double* dx = grad_mut(x).data.data();
        for (size_t i = 0; i < batch; ++i) {
            kernels::add(dx + (i * len + t) * f, dy + i * f, f);
        }
    };
    return yv;
}

Value Tape::concat_last(const std::vector<Value>& xs) {
    if (xs.empty()) throw ShapeError("concat_last: nothing to concatenate");
    const Tensor& first = val(xs[0]);
    const size_t rank = first.rank();
    if (rank != 2 && rank != 3) throw ShapeError("concat_last: rank must be 2 or 3, got " + first.shape_str());
    size_t lead = 1;
    for (size_t i = 0; i + 1 < rank; ++i) lead *= first.dim(i);
    size_t total_f = 0;
    std::vector<size_t> widths;
    for (Value v : xs) {
        const Tensor& tv = val(v);
        if (tv.rank() != rank) shape_fail("concat_last", tv, first);
        for (size_t i = 0; i + 1 < rank; ++i) {
            if (tv.dim(i) != first.dim(i)) shape_fail("concat_last", tv, first);
        }
        widths.push_back(tv.dim(rank - 1));
        total_f += tv.dim(rank - 1);
    }
    std::vector<size_t> out_shape(first.shape);
    out_shape[rank - 1] = total_f;

    Tensor y(out_shape);
    for (size_t row = 0; row < lead; ++row) {
        size_t off = 0;
        for (size_t j = 0; j < xs.size(); ++j) {
            const Tensor& tv = val(xs[j]);
            std::copy_n(tv.data.data() + row * widths[j], widths[j],
                        y.data.data() + row * total_f + off);
            off += widths[j];
        }
    }

    std::vector<Value> parents(xs);
    Node n;
    n.value = std::move(y);
    for (Value p : parents) {
        if (nodes_.at(p.id).requires_grad) n.requires_grad = true;
    }
    nodes_.push_back(std::move(n));
    Value yv{nodes_.size() - 1};
    node(yv).back = [this, yv, parents, widths, lead, total_f]() {
        const double* dy = grad(yv).data.data();
        for (size_t row = 0; row < lead; ++row) {
            size_t off = 0;
            for (size_t j = 0; j < parents.size(); ++j) {
                kernels::add(grad_mut(parents[j]).data.data() + row * widths[j],
                             dy + row * total_f + off, widths[j]);
                off += widths[j];
            }
        }
    };
    return yv;
}

Value Tape::reshape(Value x, std::vector<size_t> shape) {
    const Tensor& xv = val(x);
    size_t n = 1;
    for (size_t d : shape) n *= d;
    if (n != xv.size()) {
        throw ShapeError("reshape: cannot view " + xv.shape_str() + " as " +
                         Tensor{shape, 0.0}.shape_str());
    }
    Tensor y;
    y.shape = std::move(shape);
    y.data = xv.data;
    Value yv = push(std::move(y), {x});
    node(yv).back = [this, yv, x]() {
        kernels::add(grad_mut(x).data.data(), grad(yv).data.data(), val(x).size());
    };
    return yv;
}

Value Tape::embedding_rows(Value emb, const std::vector<size_t>& ids, size_t batch, size_t len) {
    const Tensor& ev = val(emb);
    if (ev.rank() != 2) throw ShapeError("embedding_rows: table must be rank 2, got " + ev.shape_str());
    if (ids.size() != batch * len) {
        throw ShapeError("embedding_rows: " + std::to_string(ids.size()) + " ids for batch " +
                         std::to_string(batch) + " x len " + std::to_string(len));
    }
    const size_t vocab = ev.dim(0), e = ev.dim(1);
    Tensor y({batch, len, e});
    for (size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] >= vocab) throw ShapeError("embedding_rows: id out of vocabulary");
        std::copy_n(ev.data.data() + ids[i] * e, e, y.data.data() + i * e);
    }
    Value yv = push(std::move(y), {emb});
    node(yv).back = [this, yv, emb, ids, e]() {
        const double* dy = grad(yv).data.data();
        double* de = grad_mut(emb).data.data();
        for (size_t i = 0; i < ids.size(); ++i) {
            kernels::add(de + ids[i] * e, dy + i * e, e);
        }
    };
    return yv;
}

Tape::Attention Tape::attention(Value h, Value w, Value b, Value v) {
    const Tensor& hv = val(h);
    const Tensor& wv = val(w);
    const Tensor& bv = val(b);
    const Tensor& vv = val(v);
    if (hv.rank() != 3) throw ShapeError("attention: input must be [batch,len,d], got " + hv.shape_str());
    const size_t batch = hv.dim(0), len = hv.dim(1), d = hv.dim(2);
    if (wv.rank() != 2 || wv.dim(0) != d) shape_fail("attention projection", wv, hv);
    const size_t a = wv.dim(1);
    if (bv.rank() != 1 || bv.dim(0) != a) shape_fail("attention bias", bv, wv);
    if (vv.rank() != 1 || vv.dim(0) != a) shape_fail("attention score vector", vv, wv);

    Tensor tanh_u({batch, len, a});
    Tensor alpha({batch, len});
    Tensor context({batch, d});
    std::vector<double> u(a);
    for (size_t i = 0; i < batch; ++i) {
        // scores via v . tanh(W h_t + b)
        for (size_t t = 0; t < len; ++t) {
            std::copy(bv.data.begin(), bv.data.end(), u.begin());
            const double* hr = hv.data.data() + (i * len + t) * d;
            for (size_t k = 0; k < d; ++k) {
                kernels::axpy(u.data(), hr[k], wv.data.data() + k * a, a);
            }
            double* tur = tanh_u.data.data() + (i * len + t) * a;
            for (size_t j = 0; j < a; ++j) tur[j] = std::tanh(u[j]);
            alpha.data[i * len + t] = kernels::dot(vv.data.data(), tur, a);
        }
        // stable softmax over the scores
        double* sc = alpha.data.data() + i * len;
        double mx = sc[0];
        for (size_t t = 1; t < len; ++t) mx = std::max(mx, sc[t]);
        double sum = 0.0;
        for (size_t t = 0; t < len; ++t) {
            sc[t] = std::exp(sc[t] - mx);
            sum += sc[t];
        }
        for (size_t t = 0; t < len; ++t) sc[t] /= sum;
        double* ctx = context.data.data() + i * d;
        for (size_t t = 0; t < len; ++t) {
            kernels::axpy(ctx, sc[t], hv.data.data() + (i * len + t) * d, d);
        }
    }

    Value ctxv = push(std::move(context), {h, w, b, v});
    Node& n = node(ctxv);
    n.saved.push_back(std::move(tanh_u));
    n.saved.push_back(alpha);  // keep a copy for backward
    n.back = [this, ctxv, h, w, b, v, batch, len, d, a]() {
        const Tensor& tanh_u = node(ctxv).saved[0];
        const Tensor& alpha = node(ctxv).saved[1];
        const Tensor& hval = val(h);
        const Tensor& wval = val(w);
        const Tensor& vval = val(v);
        const double* dctx = grad(ctxv).data.data();
        double* dh = grad_mut(h).data.data();
        double* dw = grad_mut(w).data.data();
        double* db = grad_mut(b).data.data();
        double* dv = grad_mut(v).data.data();

        std::vector<double> dalpha(len), ds(len), du(a);
        for (size_t i = 0; i < batch; ++i) {
            const double* dc = dctx + i * d;
            const double* al = alpha.data.data() + i * len;
            // context = sum_t alpha_t h_t
            double dot_sum = 0.0;
            for (size_t t = 0; t < len; ++t) {
                const double* hr = hval.data.data() + (i * len + t) * d;
                dalpha[t] = kernels::dot(dc, hr, d);
                kernels::axpy(dh + (i * len + t) * d, al[t], dc, d);
                dot_sum += al[t] * dalpha[t];
            }
            // softmax backward
            for (size_t t = 0; t < len; ++t) ds[t] = al[t] * (dalpha[t] - dot_sum);
            for (size_t t = 0; t < len; ++t) {
                const double* tur = tanh_u.data.data() + (i * len + t) * a;
                const double* hr = hval.data.data() + (i * len + t) * d;
                for (size_t j = 0; j < a; ++j) {
                    dv[j] += ds[t] * tur[j];
                    du[j] = ds[t] * vval.data[j] * (1.0 - tur[j] * tur[j]);
                }
                kernels::add(db, du.data(), a);
                double* dhr = dh + (i * len + t) * d;
                for (size_t k = 0; k < d; ++k) {
                    dhr[k] += kernels::dot(du.data(), wval.data.data() + k * a, a);
                    kernels::axpy(dw + k * a, hr[k], du.data(), a);
                }
            }
        }
    };

    // The exposed weights are a detached snapshot; gradient flows through the
    // context path above.
    Value weights = leaf(node(ctxv).saved[1], false);
    return {ctxv, weights};
}

Value Tape::mse(Value pred, const Tensor& target) {
    const Tensor& pv = val(pred);
    if (pv.size() != target.size() || pv.size() == 0) {
        throw ShapeError("mse: prediction size " + std::to_string(pv.size()) +
                         " vs target size " + std::to_string(target.size()));
    }
    const size_t n = pv.size();
    double sum = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double r = pv.data[i] - target.data[i];
        sum += r * r;
    }
    Value yv = push(Tensor::scalar(sum / static_cast<double>(n)), {pred});
    node(yv).saved.push_back(target);
    node(yv).back = [this, yv, pred, n]() {
        const double dy = grad(yv).data[0];
        const Tensor& tgt = node(yv).saved[0];
        const Tensor& pv2 = val(pred);
        double* dp = grad_mut(pred).data.data();
        const double scale = 2.0 * dy / static_cast<double>(n);
        for (size_t i = 0; i < n; ++i) {
            dp[i] += scale * (pv2.data[i] - tgt.data[i]);
        }
    };
    return yv;
}

void Tape::backward(Value loss) {
    if (val(loss).size() != 1) {
        throw ShapeError("backward: loss must be a scalar, got " + val(loss).shape_str());
    }
    for (Node& n : nodes_) {
        n.grad = Tensor(n.value.shape);
    }
    nodes_.at(loss.id).grad.data[0] = 1.0;
    for (size_t id = loss.id + 1; id-- > 0;) {
        if (nodes_[id].back) nodes_[id].back();
    }
}

Value bilstm(Tape& tape, Value x, Value wx_f, Value wh_f, Value b_f, Value wx_b, Value wh_b,
             Value b_b) {
    Value fwd = tape.lstm(x, wx_f, wh_f, b_f);
    Value rev_in = tape.reverse_time(x);
    Value bwd = tape.lstm(rev_in, wx_b, wh_b, b_b);
    Value bwd_aligned = tape.reverse_time(bwd);
    return tape.concat_last({fwd, bwd_aligned});
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               double learning_rate) {
    if (params.size() != grads.size()) {
        throw ShapeError("adam_step: " + std::to_string(params.size()) + " parameters but " +
                         std::to_string(grads.size()) + " gradients");
    }
    if (state.m.empty()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
    }
    if (state.m.size() != params.size()) {
        throw ShapeError("adam_step: state size " + std::to_string(state.m.size()) +
                         " does not match parameter size " + std::to_string(params.size()));
    }
    state.t += 1;
    const double corr1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double corr2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        const double mhat = state.m[i] / corr1;
        const double vhat = state.v[i] / corr2;
        params[i] -= learning_rate * mhat / (std::sqrt(vhat) + state.eps);
    }
}

double grad_check(const GraphFn& f, const std::vector<Tensor>& params, double h) {
    auto eval = [&](const std::vector<Tensor>& p) -> double {
        Tape tape;
        std::vector<Value> leaves;
        leaves.reserve(p.size());
        for (const Tensor& t : p) leaves.push_back(tape.leaf(t, true));
        Value loss = f(tape, leaves);
        double out = tape.val(loss).data[0];
        if (!std::isfinite(out)) throw NumericError("grad_check: non-finite loss");
        return out;
    };

    // analytic pass
    std::vector<Tensor> analytic;
    {
        Tape tape;
        std::vector<Value> leaves;
        for (const Tensor& t : params) leaves.push_back(tape.leaf(t, true));
        Value loss = f(tape, leaves);
        if (!std::isfinite(tape.val(loss).data[0])) {
            throw NumericError("grad_check: non-finite loss");
        }
        tape.backward(loss);
        for (Value l : leaves) analytic.push_back(tape.grad(l));
    }

    double max_rel = 0.0;
    std::vector<Tensor> work = params;
    for (size_t p = 0; p < params.size(); ++p) {
        for (size_t i = 0; i < params[p].size(); ++i) {
            const double orig = work[p].data[i];
            work[p].data[i] = orig + h;
            const double fp = eval(work);
            work[p].data[i] = orig - h;
            const double fm = eval(work);
            work[p].data[i] = orig;
            const double numeric = (fp - fm) / (2.0 * h);
            const double a = analytic[p].data[i];
            const double rel = std::fabs(a - numeric) / std::max(1e-8, std::fabs(a) + std::fabs(numeric));
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

}  // namespace lexpred::ad
