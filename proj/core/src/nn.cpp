#include "plumerl/nn.hpp"

#include "plumerl/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace plumerl {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void apply_activation(Tensor2& t, Activation act) {
  if (act == Activation::Identity) return;
  for (double& v : t.data) v = v > 0.0 ? v : 0.0;
}

} // namespace

Tensor2 dense_forward(const DenseLayer& layer, const Tensor2& input) {
  require(input.cols == layer.in_dim(), "dense_forward: input width != layer input dim");
  Tensor2 out;
  matmul(input, layer.w, out);
  add_row(out, layer.b);
  apply_activation(out, layer.act);
  return out;
}

LstmState lstm_zero_state(int batch, int hidden) {
  return {Tensor2(batch, hidden), Tensor2(batch, hidden)};
}

namespace {

/// Computes one LSTM step into the cache slots (gi..h). `gates` is scratch.
void lstm_step_cached(const LstmParams& p, const Tensor2& x, const Tensor2& h_prev,
                      const Tensor2& c_prev, Tensor2& gates, StepCache& sc) {
  const int batch = x.rows;
  const int hidden = p.hidden_dim();
  require(x.cols == p.input_dim(), "lstm_step: input width != lstm input dim");
  require(h_prev.rows == batch && h_prev.cols == hidden, "lstm_step: bad hidden shape");
  require(c_prev.rows == batch && c_prev.cols == hidden, "lstm_step: bad cell shape");

  matmul(x, p.w_x, gates);
  Tensor2 hg;
  matmul(h_prev, p.w_h, hg);
  for (std::size_t i = 0; i < gates.data.size(); ++i) gates.data[i] += hg.data[i];
  add_row(gates, p.b);

  sc.gi = Tensor2(batch, hidden);
  sc.gf = Tensor2(batch, hidden);
  sc.gg = Tensor2(batch, hidden);
  sc.go = Tensor2(batch, hidden);
  sc.c = Tensor2(batch, hidden);
  sc.tanh_c = Tensor2(batch, hidden);
  sc.h = Tensor2(batch, hidden);
  for (int b = 0; b < batch; ++b) {
    const double* grow = gates.row(b);
    const double* cprev = c_prev.row(b);
    double* gi = sc.gi.row(b);
    double* gf = sc.gf.row(b);
    double* gg = sc.gg.row(b);
    double* go = sc.go.row(b);
    double* c = sc.c.row(b);
    double* tc = sc.tanh_c.row(b);
    double* h = sc.h.row(b);
    for (int j = 0; j < hidden; ++j) {
      gi[j] = sigmoid(grow[j]);
      gf[j] = sigmoid(grow[hidden + j]);
      gg[j] = std::tanh(grow[2 * hidden + j]);
      go[j] = sigmoid(grow[3 * hidden + j]);
      c[j] = gf[j] * cprev[j] + gi[j] * gg[j];
      tc[j] = std::tanh(c[j]);
      h[j] = go[j] * tc[j];
    }
  }
}

} // namespace

LstmState lstm_step(const LstmParams& params, const Tensor2& x, const LstmState& state) {
  StepCache sc;
  Tensor2 gates;
  lstm_step_cached(params, x, state.h, state.c, gates, sc);
  return {std::move(sc.h), std::move(sc.c)};
}

std::vector<std::pair<std::string, Tensor2*>> NetworkParams::param_refs() {
  return {{"obs_embed.w", &obs_embed.w}, {"obs_embed.b", &obs_embed.b},
          {"act_embed.w", &act_embed.w}, {"act_embed.b", &act_embed.b},
          {"lstm.w_x", &lstm.w_x},       {"lstm.w_h", &lstm.w_h},
          {"lstm.b", &lstm.b},           {"head.w", &head.w},
          {"head.b", &head.b}};
}

std::vector<std::pair<std::string, const Tensor2*>> NetworkParams::param_refs() const {
  auto refs = const_cast<NetworkParams*>(this)->param_refs();
  std::vector<std::pair<std::string, const Tensor2*>> out;
  out.reserve(refs.size());
  for (auto& [name, t] : refs) out.emplace_back(name, t);
  return out;
}

std::size_t NetworkParams::param_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : param_refs()) n += t->size();
  return n;
}

NetworkParams init_network(const NetworkConfig& config, Rng& rng) {
  require(config.obs_dim > 0 && config.act_dim > 0 && config.obs_embed > 0 &&
              config.act_embed > 0 && config.hidden > 0 && config.outputs > 0,
          "init_network: all dimensions must be positive");
  NetworkParams net;
  net.config = config;
  net.obs_embed = {Tensor2(config.obs_dim, config.obs_embed), Tensor2(1, config.obs_embed),
                   Activation::ReLU};
  net.act_embed = {Tensor2(config.act_dim, config.act_embed), Tensor2(1, config.act_embed),
                   Activation::ReLU};
  const int lstm_in = config.obs_embed + config.act_embed;
  net.lstm = {Tensor2(lstm_in, 4 * config.hidden), Tensor2(config.hidden, 4 * config.hidden),
              Tensor2(1, 4 * config.hidden)};
  net.head = {Tensor2(config.hidden, config.outputs), Tensor2(1, config.outputs),
              Activation::Identity};

  fill_uniform(net.obs_embed.w, 1.0 / std::sqrt(config.obs_dim), rng);
  fill_uniform(net.act_embed.w, 1.0 / std::sqrt(config.act_dim), rng);
  fill_uniform(net.lstm.w_x, 1.0 / std::sqrt(lstm_in), rng);
  fill_uniform(net.lstm.w_h, 1.0 / std::sqrt(config.hidden), rng);
  fill_uniform(net.head.w, 1.0 / std::sqrt(config.hidden), rng);
  return net;
}

NetworkParams zeros_like(const NetworkParams& net) {
  NetworkParams z;
  z.config = net.config;
  z.obs_embed = {Tensor2(net.obs_embed.w.rows, net.obs_embed.w.cols),
                 Tensor2(1, net.obs_embed.b.cols), net.obs_embed.act};
  z.act_embed = {Tensor2(net.act_embed.w.rows, net.act_embed.w.cols),
                 Tensor2(1, net.act_embed.b.cols), net.act_embed.act};
  z.lstm = {Tensor2(net.lstm.w_x.rows, net.lstm.w_x.cols),
            Tensor2(net.lstm.w_h.rows, net.lstm.w_h.cols), Tensor2(1, net.lstm.b.cols)};
  z.head = {Tensor2(net.head.w.rows, net.head.w.cols), Tensor2(1, net.head.b.cols),
            net.head.act};
  return z;
}

std::vector<Tensor2> q_forward(const NetworkParams& net, std::span<const Tensor2> obs_steps,
                               std::span<const Tensor2> act_steps, const LstmState& s0,
                               LstmState* final_state, ForwardCache* cache) {
  require(!obs_steps.empty(), "q_forward: empty sequence");
  require(obs_steps.size() == act_steps.size(), "q_forward: obs/act sequence lengths differ");
  const int batch = obs_steps[0].rows;
  const int hidden = net.config.hidden;
  require(s0.h.rows == batch && s0.h.cols == hidden && s0.c.rows == batch &&
              s0.c.cols == hidden,
          "q_forward: initial state shape mismatch");

  std::vector<Tensor2> q_seq;
  q_seq.reserve(obs_steps.size());
  if (cache) {
    cache->s0 = s0;
    cache->steps.clear();
    cache->steps.resize(obs_steps.size());
  }

  LstmState state = s0;
  Tensor2 gates;
  StepCache local;
  for (std::size_t t = 0; t < obs_steps.size(); ++t) {
    const Tensor2& obs = obs_steps[t];
    const Tensor2& act = act_steps[t];
    require(obs.rows == batch && act.rows == batch, "q_forward: ragged batch");
    require(obs.cols == net.config.obs_dim, "q_forward: observation width mismatch");
    require(act.cols == net.config.act_dim, "q_forward: action width mismatch");

    StepCache& sc = cache ? cache->steps[t] : local;
    sc.eo = dense_forward(net.obs_embed, obs);
    sc.ea = dense_forward(net.act_embed, act);
    sc.x = Tensor2(batch, sc.eo.cols + sc.ea.cols);
    for (int b = 0; b < batch; ++b) {
      double* xrow = sc.x.row(b);
      std::copy(sc.eo.row(b), sc.eo.row(b) + sc.eo.cols, xrow);
      std::copy(sc.ea.row(b), sc.ea.row(b) + sc.ea.cols, xrow + sc.eo.cols);
    }
    lstm_step_cached(net.lstm, sc.x, state.h, state.c, gates, sc);
    sc.q = dense_forward(net.head, sc.h);
    if (cache) {
      sc.obs_in = obs;
      sc.act_in = act;
    }
    q_seq.push_back(sc.q);
    state.h = sc.h;
    state.c = sc.c;
  }
  check_finite(q_seq.back(), "q_forward outputs");
  if (final_state) *final_state = std::move(state);
  return q_seq;
}

double masked_mse(std::span<const double> q_taken, std::span<const double> y,
                  std::span<const std::uint8_t> mask) {
  require(q_taken.size() == y.size() && y.size() == mask.size(),
          "masked_mse: length mismatch");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!mask[i]) continue;
    const double d = q_taken[i] - y[i];
    sum += d * d;
    n += 1;
  }
  if (n == 0) throw std::domain_error("masked_mse: every step is masked");
  return sum / static_cast<double>(n);
}

double backward(const NetworkParams& net, const ForwardCache& cache, const TargetBatch& targets,
                Gradients& grads) {
  const std::size_t seq_len = cache.steps.size();
  require(seq_len > 0, "backward: empty cache");
  require(static_cast<std::size_t>(targets.seq_len) == seq_len,
          "backward: target length != cached sequence length");
  const int batch = cache.steps[0].h.rows;
  require(targets.batch == batch, "backward: target batch != cached batch");
  const int hidden = net.config.hidden;
  const int eo_dim = net.config.obs_embed;

  grads = zeros_like(net);

  // Loss normalization over valid steps.
  std::size_t valid = 0;
  for (auto m : targets.mask) valid += m;
  if (valid == 0) throw std::domain_error("backward: every step is masked");
  const double inv_count = 1.0 / static_cast<double>(valid);

  double loss = 0.0;
  Tensor2 dh_carry(batch, hidden), dc_carry(batch, hidden);
  Tensor2 dq(batch, net.config.outputs);
  Tensor2 dh, dx;
  Tensor2 da(batch, 4 * hidden);
  Tensor2 dpre;

  for (std::size_t ti = seq_len; ti-- > 0;) {
    const int t = static_cast<int>(ti);
    const StepCache& sc = cache.steps[ti];
    const Tensor2& h_prev = ti == 0 ? cache.s0.h : cache.steps[ti - 1].h;
    const Tensor2& c_prev = ti == 0 ? cache.s0.c : cache.steps[ti - 1].c;

    // dL/dq: 2(q - y)/M at the taken action of each valid step.
    dq.fill(0.0);
    for (int b = 0; b < batch; ++b) {
      const std::size_t cell = targets.flat(b, t);
      if (!targets.mask[cell]) continue;
      const int a = targets.action[cell];
      require(a >= 0 && a < net.config.outputs, "backward: action index out of range");
      const double diff = sc.q.at(b, a) - targets.y[cell];
      loss += diff * diff * inv_count;
      dq.at(b, a) = 2.0 * diff * inv_count;
    }

    // Head (identity activation).
    matmul_at_b_acc(sc.h, dq, grads.head.w);
    colsum_acc(dq, grads.head.b);
    matmul_a_bt(dq, net.head.w, dh);
    for (std::size_t i = 0; i < dh.data.size(); ++i) dh.data[i] += dh_carry.data[i];

    // LSTM cell internals.
    for (int b = 0; b < batch; ++b) {
      const double* gi = sc.gi.row(b);
      const double* gf = sc.gf.row(b);
      const double* gg = sc.gg.row(b);
      const double* go = sc.go.row(b);
      const double* tc = sc.tanh_c.row(b);
      const double* cp = c_prev.row(b);
      const double* dhr = dh.row(b);
      double* dar = da.row(b);
      double* dcr = dc_carry.row(b); // read as the t+1 carry, rewritten for t-1
      for (int j = 0; j < hidden; ++j) {
        const double do_ = dhr[j] * tc[j];
        const double dc = dcr[j] + dhr[j] * go[j] * (1.0 - tc[j] * tc[j]);
        const double di = dc * gg[j];
        const double dg = dc * gi[j];
        const double df = dc * cp[j];
        dar[j] = di * gi[j] * (1.0 - gi[j]);
        dar[hidden + j] = df * gf[j] * (1.0 - gf[j]);
        dar[2 * hidden + j] = dg * (1.0 - gg[j] * gg[j]);
        dar[3 * hidden + j] = do_ * go[j] * (1.0 - go[j]);
        dcr[j] = dc * gf[j];
      }
    }

    matmul_at_b_acc(sc.x, da, grads.lstm.w_x);
    matmul_at_b_acc(h_prev, da, grads.lstm.w_h);
    colsum_acc(da, grads.lstm.b);
    matmul_a_bt(da, net.lstm.w_x, dx);
    matmul_a_bt(da, net.lstm.w_h, dh_carry);

    // Split dx into the two embedding branches; ReLU gates on post-activations.
    dpre = Tensor2(batch, eo_dim);
    for (int b = 0; b < batch; ++b)
      for (int j = 0; j < eo_dim; ++j)
        dpre.at(b, j) = sc.eo.at(b, j) > 0.0 ? dx.at(b, j) : 0.0;
    matmul_at_b_acc(sc.obs_in, dpre, grads.obs_embed.w);
    colsum_acc(dpre, grads.obs_embed.b);

    const int ea_dim = net.config.act_embed;
    dpre = Tensor2(batch, ea_dim);
    for (int b = 0; b < batch; ++b)
      for (int j = 0; j < ea_dim; ++j)
        dpre.at(b, j) = sc.ea.at(b, j) > 0.0 ? dx.at(b, eo_dim + j) : 0.0;
    matmul_at_b_acc(sc.act_in, dpre, grads.act_embed.w);
    colsum_acc(dpre, grads.act_embed.b);
  }

  check_finite(grads.lstm.w_x, "backward gradients");
  return loss;
}

AdamState make_adam(const NetworkParams& net, double alpha) {
  AdamState st;
  st.alpha = alpha;
  st.m = zeros_like(net);
  st.v = zeros_like(net);
  return st;
}

void adam_update(NetworkParams& params, const Gradients& grads, AdamState& state) {
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  auto p = params.param_refs();
  auto g = grads.param_refs();
  auto m = state.m.param_refs();
  auto v = state.v.param_refs();
  for (std::size_t i = 0; i < p.size(); ++i) {
    Tensor2& pt = *p[i].second;
    const Tensor2& gt = *g[i].second;
    Tensor2& mt = *m[i].second;
    Tensor2& vt = *v[i].second;
    require(pt.same_shape(gt) && pt.same_shape(mt) && pt.same_shape(vt),
            "adam_update: shape mismatch");
    for (std::size_t k = 0; k < pt.data.size(); ++k) {
      const double grad = gt.data[k];
      mt.data[k] = state.beta1 * mt.data[k] + (1.0 - state.beta1) * grad;
      vt.data[k] = state.beta2 * vt.data[k] + (1.0 - state.beta2) * grad * grad;
      const double mhat = mt.data[k] / bc1;
      const double vhat = vt.data[k] / bc2;
      pt.data[k] -= state.alpha * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

double clip_gradients(Gradients& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& [name, t] : grads.param_refs())
    for (double v : t->data) sq += v * v;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& [name, t] : grads.param_refs())
      for (double& v : t->data) v *= scale;
  }
  return norm;
}

void soft_update(const NetworkParams& online, NetworkParams& target, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("soft_update: tau outside [0,1]");
  auto o = online.param_refs();
  auto t = target.param_refs();
  for (std::size_t i = 0; i < o.size(); ++i) {
    const Tensor2& ot = *o[i].second;
    Tensor2& tt = *t[i].second;
    require(ot.same_shape(tt), "soft_update: shape mismatch");
    for (std::size_t k = 0; k < ot.data.size(); ++k)
      tt.data[k] = tau * ot.data[k] + (1.0 - tau) * tt.data[k];
  }
}

} // namespace plumerl
