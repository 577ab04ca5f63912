#include "seqlab/autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace seqlab {

namespace {

// C += A * B
void mm_acc(const Mat& A, const Mat& B, Mat& C) {
    for (int i = 0; i < A.rows; ++i) {
        for (int k = 0; k < A.cols; ++k) {
            double aik = A(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < B.cols; ++j) C(i, j) += aik * B(k, j);
        }
    }
}

// C += A^T * B
void mm_tn_acc(const Mat& A, const Mat& B, Mat& C) {
    for (int k = 0; k < A.rows; ++k) {
        for (int i = 0; i < A.cols; ++i) {
            double aki = A(k, i);
            if (aki == 0.0) continue;
            for (int j = 0; j < B.cols; ++j) C(i, j) += aki * B(k, j);
        }
    }
}

// C += A * B^T
void mm_nt_acc(const Mat& A, const Mat& B, Mat& C) {
    for (int i = 0; i < A.rows; ++i) {
        for (int j = 0; j < B.rows; ++j) {
            double s = 0.0;
            for (int k = 0; k < A.cols; ++k) s += A(i, k) * B(j, k);
            C(i, j) += s;
        }
    }
}

double stable_sigmoid(double t) {
    if (t >= 0.0) {
        return 1.0 / (1.0 + std::exp(-t));
    }
    double e = std::exp(t);
    return e / (1.0 + e);
}

}  // namespace

Param& ParamStore::create(const std::string& name, int rows, int cols) {
    if (index_.count(name))
        throw ContractError("parameter already exists: " + name);
    items_.push_back(std::make_unique<Param>(name, rows, cols));
    Param* p = items_.back().get();
    index_[name] = p;
    return *p;
}

Param* ParamStore::find(const std::string& name) {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : it->second;
}

const Param* ParamStore::find(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : it->second;
}

Param& ParamStore::at(const std::string& name) {
    Param* p = find(name);
    if (!p) throw ContractError("unknown parameter: " + name);
    return *p;
}

const Param& ParamStore::at(const std::string& name) const {
    const Param* p = find(name);
    if (!p) throw ContractError("unknown parameter: " + name);
    return *p;
}

size_t ParamStore::scalar_count() const {
    size_t n = 0;
    for (const auto& p : items_) n += p->size();
    return n;
}

void ParamStore::zero_grads() {
    for (auto& p : items_) p->zero_grad();
}

void ParamStore::remove(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw ContractError("unknown parameter: " + name);
    Param* target = it->second;
    index_.erase(it);
    std::erase_if(items_, [&](const std::unique_ptr<Param>& p) { return p.get() == target; });
}

void glorot_init(Mat& m, int fan_in, int fan_out, Rng& rng) {
    double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& v : m.a) v = rng.uniform(-bound, bound);
}

const Mat& Value::data() const {
    if (!tape_) throw ContractError("use of an undefined Value");
    return tape_->node(id_).data;
}

const Mat& Value::grad() const {
    if (!tape_) throw ContractError("use of an undefined Value");
    return tape_->node(id_).grad;
}

int Value::rows() const { return data().rows; }
int Value::cols() const { return data().cols; }

double Value::scalar() const {
    const Mat& d = data();
    if (d.rows != 1 || d.cols != 1)
        throw ContractError("scalar() on a " + d.shape_str() + " Value");
    return d.a[0];
}

int Tape::push(Node n) {
    n.grad = Mat(n.data.rows, n.data.cols);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

int Tape::check(Value v, const char* op) const {
    if (v.tape_ != this)
        throw ContractError(std::string(op) + ": Value does not belong to this tape");
    return v.id_;
}

Value Tape::constant(Mat m) {
    Node n;
    n.op = Op::Constant;
    n.data = std::move(m);
    return Value(this, push(std::move(n)));
}

Value Tape::input(Param& p) {
    auto it = input_cache_.find(&p);
    if (it != input_cache_.end()) return Value(this, it->second);
    Node n;
    n.op = Op::Input;
    n.data = p.value;
    n.bound = &p;
    int id = push(std::move(n));
    input_cache_[&p] = id;
    return Value(this, id);
}

Value Tape::row_of(Param& table, int row) {
    if (row < 0 || row >= table.value.rows)
        throw IndexError("row_of: row " + std::to_string(row) + " outside table " +
                         table.value.shape_str());
    Node n;
    n.op = Op::RowOf;
    n.data = Mat(table.value.cols, 1);
    for (int j = 0; j < table.value.cols; ++j) n.data(j, 0) = table.value(row, j);
    n.bound = &table;
    n.index = row;
    return Value(this, push(std::move(n)));
}

Value Tape::matmul(Value a, Value b) {
    int ia = check(a, "matmul"), ib = check(b, "matmul");
    const Mat& A = node(ia).data;
    const Mat& B = node(ib).data;
    if (A.cols != B.rows)
        throw DimensionError("matmul: inner dimensions disagree: " + A.shape_str() +
                             " vs " + B.shape_str());
    Node n;
    n.op = Op::MatMul;
    n.in0 = ia;
    n.in1 = ib;
    n.data = Mat(A.rows, B.cols);
    mm_acc(A, B, n.data);
    return Value(this, push(std::move(n)));
}

Value Tape::add(Value a, Value b) {
    int ia = check(a, "add"), ib = check(b, "add");
    const Mat& A = node(ia).data;
    const Mat& B = node(ib).data;
    if (!A.same_shape(B))
        throw DimensionError("add: shape mismatch: " + A.shape_str() + " vs " + B.shape_str());
    Node n;
    n.op = Op::Add;
    n.in0 = ia;
    n.in1 = ib;
    n.data = A;
    for (size_t i = 0; i < B.size(); ++i) n.data.a[i] += B.a[i];
    return Value(this, push(std::move(n)));
}

Value Tape::mul(Value a, Value b) {
    int ia = check(a, "mul"), ib = check(b, "mul");
    const Mat& A = node(ia).data;
    const Mat& B = node(ib).data;
    if (!A.same_shape(B))
        throw DimensionError("mul: shape mismatch: " + A.shape_str() + " vs " + B.shape_str());
    Node n;
    n.op = Op::Mul;
    n.in0 = ia;
    n.in1 = ib;
    n.data = A;
    for (size_t i = 0; i < B.size(); ++i) n.data.a[i] *= B.a[i];
    return Value(this, push(std::move(n)));
}

Value Tape::tanh(Value x) {
    int ix = check(x, "tanh");
    Node n;
    n.op = Op::Tanh;
    n.in0 = ix;
    n.data = node(ix).data;
    for (double& v : n.data.a) v = std::tanh(v);
    return Value(this, push(std::move(n)));
}

Value Tape::sigmoid(Value x) {
    int ix = check(x, "sigmoid");
    Node n;
    n.op = Op::Sigmoid;
    n.in0 = ix;
    n.data = node(ix).data;
    for (double& v : n.data.a) v = stable_sigmoid(v);
    return Value(this, push(std::move(n)));
}

Value Tape::one_minus(Value x) {
    int ix = check(x, "one_minus");
    Node n;
    n.op = Op::OneMinus;
    n.in0 = ix;
    n.data = node(ix).data;
    for (double& v : n.data.a) v = 1.0 - v;
    return Value(this, push(std::move(n)));
}

Value Tape::scale(Value x, double c) {
    int ix = check(x, "scale");
    Node n;
    n.op = Op::Scale;
    n.in0 = ix;
    n.factor = c;
    n.data = node(ix).data;
    for (double& v : n.data.a) v *= c;
    return Value(this, push(std::move(n)));
}

Value Tape::concat(Value a, Value b) {
    int ia = check(a, "concat"), ib = check(b, "concat");
    const Mat& A = node(ia).data;
    const Mat& B = node(ib).data;
    if (A.cols != B.cols)
        throw DimensionError("concat: column counts disagree: " + A.shape_str() + " vs " +
                             B.shape_str());
    Node n;
    n.op = Op::Concat;
    n.in0 = ia;
    n.in1 = ib;
    n.data = Mat(A.rows + B.rows, A.cols);
    std::copy(A.a.begin(), A.a.end(), n.data.a.begin());
    std::copy(B.a.begin(), B.a.end(), n.data.a.begin() + A.size());
    return Value(this, push(std::move(n)));
}

Value Tape::softmax(Value v) {
    int iv = check(v, "softmax");
    const Mat& x = node(iv).data;
    if (x.cols != 1 || x.rows < 1)
        throw DimensionError("softmax: expected a column vector, got " + x.shape_str());
    if (!all_finite(x)) throw NumericError("softmax: non-finite input");
    Node n;
    n.op = Op::Softmax;
    n.in0 = iv;
    n.data = Mat(x.rows, 1);
    double mx = x.a[0];
    for (double e : x.a) mx = std::max(mx, e);
    double z = 0.0;
    for (int i = 0; i < x.rows; ++i) {
        n.data.a[i] = std::exp(x.a[i] - mx);
        z += n.data.a[i];
    }
    for (double& e : n.data.a) e /= z;
    return Value(this, push(std::move(n)));
}

Value Tape::cross_entropy(Value y, int gold) {
    int iy = check(y, "cross_entropy");
    const Mat& p = node(iy).data;
    if (p.cols != 1)
        throw DimensionError("cross_entropy: expected a column vector, got " + p.shape_str());
    if (gold < 0 || gold >= p.rows)
        throw IndexError("cross_entropy: gold label " + std::to_string(gold) +
                         " outside [0," + std::to_string(p.rows) + ")");
    Node n;
    n.op = Op::CrossEntropy;
    n.in0 = iy;
    n.index = gold;
    n.data = Mat(1, 1);
    n.data.a[0] = -std::log(p.a[gold]);
    return Value(this, push(std::move(n)));
}

Value Tape::sum(Value x) {
    int ix = check(x, "sum");
    Node n;
    n.op = Op::Sum;
    n.in0 = ix;
    n.data = Mat(1, 1);
    for (double v : node(ix).data.a) n.data.a[0] += v;
    return Value(this, push(std::move(n)));
}

void Tape::backward(Value loss) {
    int il = check(loss, "backward");
    if (node(il).data.rows != 1 || node(il).data.cols != 1)
        throw ContractError("backward: loss must be scalar, got " +
                            node(il).data.shape_str());
    for (Node& n : nodes_) n.grad.zero();
    node(il).grad.a[0] = 1.0;

    for (int id = static_cast<int>(nodes_.size()) - 1; id >= 0; --id) {
        Node& n = nodes_[id];
        const Mat& g = n.grad;
        switch (n.op) {
            case Op::Constant:
                break;
            case Op::Input:
                for (size_t i = 0; i < g.size(); ++i) n.bound->grad.a[i] += g.a[i];
                break;
            case Op::RowOf:
                for (int j = 0; j < g.rows; ++j) n.bound->grad(n.index, j) += g.a[j];
                break;
            case Op::MatMul:
                mm_nt_acc(g, node(n.in1).data, node(n.in0).grad);
                mm_tn_acc(node(n.in0).data, g, node(n.in1).grad);
                break;
            case Op::Add:
                for (size_t i = 0; i < g.size(); ++i) {
                    node(n.in0).grad.a[i] += g.a[i];
                    node(n.in1).grad.a[i] += g.a[i];
                }
                break;
            case Op::Mul:
                for (size_t i = 0; i < g.size(); ++i) {
                    node(n.in0).grad.a[i] += g.a[i] * node(n.in1).data.a[i];
                    node(n.in1).grad.a[i] += g.a[i] * node(n.in0).data.a[i];
                }
                break;
            case Op::Tanh:
                for (size_t i = 0; i < g.size(); ++i)
                    node(n.in0).grad.a[i] += g.a[i] * (1.0 - n.data.a[i] * n.data.a[i]);
                break;
            case Op::Sigmoid:
                for (size_t i = 0; i < g.size(); ++i)
                    node(n.in0).grad.a[i] += g.a[i] * n.data.a[i] * (1.0 - n.data.a[i]);
                break;
            case Op::OneMinus:
                for (size_t i = 0; i < g.size(); ++i) node(n.in0).grad.a[i] -= g.a[i];
                break;
            case Op::Scale:
                for (size_t i = 0; i < g.size(); ++i)
                    node(n.in0).grad.a[i] += n.factor * g.a[i];
                break;
            case Op::Concat: {
                size_t na = node(n.in0).data.size();
                for (size_t i = 0; i < na; ++i) node(n.in0).grad.a[i] += g.a[i];
                for (size_t i = 0; i < node(n.in1).data.size(); ++i)
                    node(n.in1).grad.a[i] += g.a[na + i];
                break;
            }
            case Op::Softmax: {
                // d/dx_i = y_i * (g_i - sum_j g_j y_j)
                double dot = 0.0;
                for (size_t i = 0; i < g.size(); ++i) dot += g.a[i] * n.data.a[i];
                for (size_t i = 0; i < g.size(); ++i)
                    node(n.in0).grad.a[i] += n.data.a[i] * (g.a[i] - dot);
                break;
            }
            case Op::CrossEntropy:
                node(n.in0).grad.a[n.index] -= g.a[0] / node(n.in0).data.a[n.index];
                break;
            case Op::Sum:
                for (size_t i = 0; i < node(n.in0).data.size(); ++i)
                    node(n.in0).grad.a[i] += g.a[0];
                break;
        }
    }
}

void Tape::clear() {
    nodes_.clear();
    input_cache_.clear();
}

LstmWeights make_lstm(ParamStore& store, const std::string& prefix, int input_dim,
                      int hidden_dim, Rng& rng) {
    LstmWeights w;
    auto weight = [&](const std::string& name, int rows, int cols) {
        Param& p = store.create(prefix + "." + name, rows, cols);
        glorot_init(p.value, cols, rows, rng);
        return &p;
    };
    auto bias = [&](const std::string& name, double fill) {
        Param& p = store.create(prefix + "." + name, hidden_dim, 1);
        p.value.fill(fill);
        return &p;
    };
    w.Wi = weight("Wi", hidden_dim, input_dim);
    w.Ui = weight("Ui", hidden_dim, hidden_dim);
    w.bi = bias("bi", 0.0);
    w.Wf = weight("Wf", hidden_dim, input_dim);
    w.Uf = weight("Uf", hidden_dim, hidden_dim);
    w.bf = bias("bf", 1.0);  // forget gate starts open
    w.Wo = weight("Wo", hidden_dim, input_dim);
    w.Uo = weight("Uo", hidden_dim, hidden_dim);
    w.bo = bias("bo", 0.0);
    w.Wg = weight("Wg", hidden_dim, input_dim);
    w.Ug = weight("Ug", hidden_dim, hidden_dim);
    w.bg = bias("bg", 0.0);
    return w;
}

LstmState lstm_step(Tape& t, Value x, Value h_prev, Value c_prev, const LstmWeights& w) {
    auto gate_pre = [&](Param* W, Param* U, Param* b) {
        return t.add(t.add(t.matmul(t.input(*W), x), t.matmul(t.input(*U), h_prev)),
                     t.input(*b));
    };
    Value i = t.sigmoid(gate_pre(w.Wi, w.Ui, w.bi));
    Value f = t.sigmoid(gate_pre(w.Wf, w.Uf, w.bf));
    Value o = t.sigmoid(gate_pre(w.Wo, w.Uo, w.bo));
    Value g = t.tanh(gate_pre(w.Wg, w.Ug, w.bg));
    Value c = t.add(t.mul(f, c_prev), t.mul(i, g));
    Value h = t.mul(o, t.tanh(c));
    return {h, c};
}

std::vector<Value> lstm_run(Tape& t, const std::vector<Value>& xs, const LstmWeights& w) {
    Value h = t.constant(Mat(w.hidden_dim(), 1));
    Value c = t.constant(Mat(w.hidden_dim(), 1));
    std::vector<Value> out;
    out.reserve(xs.size());
    for (const Value& x : xs) {
        LstmState s = lstm_step(t, x, h, c, w);
        h = s.h;
        c = s.c;
        out.push_back(h);
    }
    return out;
}

}  // namespace seqlab
