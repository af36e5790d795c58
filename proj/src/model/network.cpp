#include "mmhar/model/network.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <string>

#include "mmhar/core/errors.hpp"
#include "mmhar/model/kernels.hpp"

namespace mmhar::model {

namespace {

using kernels::Gemm;

struct LinearSpec {
  std::size_t w = 0, b = 0;
  int in = 0, out = 0;
};

struct NormSpec {
  std::size_t g = 0, b = 0;
  int dim = 0;
};

struct BlockSpec {
  NormSpec ln1;
  LinearSpec qkv;
  LinearSpec proj;
  NormSpec ln2;
  LinearSpec ff1;
  LinearSpec ff2;
};

struct BranchSpec {
  std::string name;
  LinearSpec embed;
  std::size_t pos = 0;
  int tokens = 0;
  std::vector<BlockSpec> blocks;
  NormSpec norm;
  LinearSpec feature;
};

LinearSpec add_linear(ParamLayout& L, const std::string& name, int in, int out) {
  LinearSpec s;
  s.in = in;
  s.out = out;
  s.w = L.add(name + ".w", static_cast<std::size_t>(in) * out, InitKind::FanInUniform, in);
  s.b = L.add(name + ".b", static_cast<std::size_t>(out), InitKind::Zeros);
  return s;
}

NormSpec add_norm(ParamLayout& L, const std::string& name, int dim) {
  NormSpec s;
  s.dim = dim;
  s.g = L.add(name + ".g", static_cast<std::size_t>(dim), InitKind::Ones);
  s.b = L.add(name + ".b", static_cast<std::size_t>(dim), InitKind::Zeros);
  return s;
}

BranchSpec add_branch(ParamLayout& L, const std::string& name, int tokens, int token_width, const FusionConfig& c) {
  BranchSpec b;
  b.name = name;
  b.tokens = tokens;
  const int D = c.embed_dim;
  b.embed = add_linear(L, name + ".embed", token_width, D);
  b.pos = L.add(name + ".pos", static_cast<std::size_t>(tokens) * D, InitKind::Positional);
  for (int i = 0; i < c.depth; ++i) {
    const std::string p = name + ".block" + std::to_string(i);
    BlockSpec s;
    s.ln1 = add_norm(L, p + ".ln1", D);
    s.qkv = add_linear(L, p + ".qkv", D, 3 * D);
    s.proj = add_linear(L, p + ".proj", D, D);
    s.ln2 = add_norm(L, p + ".ln2", D);
    s.ff1 = add_linear(L, p + ".ff1", D, c.ff_mult * D);
    s.ff2 = add_linear(L, p + ".ff2", c.ff_mult * D, D);
    b.blocks.push_back(s);
  }
  b.norm = add_norm(L, name + ".norm", D);
  b.feature = add_linear(L, name + ".feature", D, c.feature_dim);
  return b;
}

constexpr double kNormEps = 1e-5;
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)

double gelu(double x) { return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + 0.044715 * x * x * x))); }

double gelu_grad(double x) {
  const double u = kGeluC * (x + 0.044715 * x * x * x);
  const double t = std::tanh(u);
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * 0.044715 * x * x);
}

void linear_fwd(const double* P, const LinearSpec& s, const Mat& x, Mat& y) {
  y = Mat(x.rows, s.out);
  for (int i = 0; i < x.rows; ++i) std::copy(P + s.b, P + s.b + s.out, y.row(i));
  kernels::gemm_nn({x.rows, s.in, s.out, x.v.data(), x.cols, P + s.w, s.out, y.v.data(), s.out, true});
}

void linear_bwd(const double* P, const LinearSpec& s, const Mat& x, const Mat& dy, double* G, Mat* dx) {
  kernels::gemm_tn({x.rows, s.in, s.out, x.v.data(), x.cols, dy.v.data(), dy.cols, G + s.w, s.out, true});
  double* gb = G + s.b;
  for (int i = 0; i < dy.rows; ++i) {
    const double* r = dy.row(i);
    for (int j = 0; j < s.out; ++j) gb[j] += r[j];
  }
  if (dx) {
    *dx = Mat(x.rows, s.in);
    kernels::gemm_nt({dy.rows, s.out, s.in, dy.v.data(), dy.cols, P + s.w, s.out, dx->v.data(), s.in, false});
  }
}

struct NormCache {
  Mat xhat;
  std::vector<double> rstd;
};

void norm_fwd(const double* P, const NormSpec& s, const Mat& x, Mat& y, NormCache& c) {
  const int D = s.dim;
  y = Mat(x.rows, D);
  c.xhat = Mat(x.rows, D);
  c.rstd.assign(static_cast<std::size_t>(x.rows), 0.0);
  const double* g = P + s.g;
  const double* b = P + s.b;
  for (int i = 0; i < x.rows; ++i) {
    const double* r = x.row(i);
    double mu = 0.0;
    for (int j = 0; j < D; ++j) mu += r[j];
    mu /= D;
    double var = 0.0;
    for (int j = 0; j < D; ++j) var += (r[j] - mu) * (r[j] - mu);
    var /= D;
    const double rs = 1.0 / std::sqrt(var + kNormEps);
    c.rstd[static_cast<std::size_t>(i)] = rs;
    double* xh = c.xhat.row(i);
    double* out = y.row(i);
    for (int j = 0; j < D; ++j) {
      xh[j] = (r[j] - mu) * rs;
      out[j] = xh[j] * g[j] + b[j];
    }
  }
}

void norm_bwd(const double* P, const NormSpec& s, const Mat& dy, const NormCache& c, double* G, Mat& dx) {
  const int D = s.dim;
  dx = Mat(dy.rows, D);
  const double* g = P + s.g;
  double* gg = G + s.g;
  double* gb = G + s.b;
  std::vector<double> dxh(static_cast<std::size_t>(D));
  for (int i = 0; i < dy.rows; ++i) {
    const double* d = dy.row(i);
    const double* xh = c.xhat.row(i);
    double mean_d = 0.0, mean_dx = 0.0;
    for (int j = 0; j < D; ++j) {
      gg[j] += d[j] * xh[j];
      gb[j] += d[j];
      dxh[static_cast<std::size_t>(j)] = d[j] * g[j];
      mean_d += dxh[static_cast<std::size_t>(j)];
      mean_dx += dxh[static_cast<std::size_t>(j)] * xh[j];
    }
    mean_d /= D;
    mean_dx /= D;
    const double rs = c.rstd[static_cast<std::size_t>(i)];
    double* out = dx.row(i);
    for (int j = 0; j < D; ++j) out[j] = rs * (dxh[static_cast<std::size_t>(j)] - mean_d - xh[j] * mean_dx);
  }
}

struct BlockCache {
  NormCache ln1;
  Mat h1;
  Mat qkv;
  std::vector<Mat> attn;
  Mat ctx;
  NormCache ln2;
  Mat h2;
  Mat ff_pre;
  Mat ff_act;
};

void add_into(Mat& a, const Mat& b) {
  for (std::size_t i = 0; i < a.v.size(); ++i) a.v[i] += b.v[i];
}

Mat block_fwd(const double* P, const BlockSpec& s, int heads, const Mat& x, BlockCache& c) {
  const int N = x.rows, D = x.cols, dh = D / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  norm_fwd(P, s.ln1, x, c.h1, c.ln1);
  linear_fwd(P, s.qkv, c.h1, c.qkv);
  c.attn.assign(static_cast<std::size_t>(heads), Mat(N, N));
  c.ctx = Mat(N, D);
  const double* qkv = c.qkv.v.data();
  for (int h = 0; h < heads; ++h) {
    Mat& A = c.attn[static_cast<std::size_t>(h)];
    kernels::gemm_nt({N, dh, N, qkv + h * dh, 3 * D, qkv + D + h * dh, 3 * D, A.v.data(), N, false});
    for (double& v : A.v) v *= scale;
    kernels::softmax_rows(A.v.data(), N, N, N);
    kernels::gemm_nn({N, N, dh, A.v.data(), N, qkv + 2 * D + h * dh, 3 * D, c.ctx.v.data() + h * dh, D, false});
  }
  Mat attn_out;
  linear_fwd(P, s.proj, c.ctx, attn_out);
  Mat mid = x;
  add_into(mid, attn_out);
  norm_fwd(P, s.ln2, mid, c.h2, c.ln2);
  linear_fwd(P, s.ff1, c.h2, c.ff_pre);
  c.ff_act = c.ff_pre;
  for (double& v : c.ff_act.v) v = gelu(v);
  Mat ff_out;
  linear_fwd(P, s.ff2, c.ff_act, ff_out);
  add_into(mid, ff_out);
  return mid;
}

Mat block_bwd(const double* P, const BlockSpec& s, int heads, const BlockCache& c, const Mat& dout, double* G) {
  const int N = dout.rows, D = dout.cols, dh = D / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Mat d_act;
  linear_bwd(P, s.ff2, c.ff_act, dout, G, &d_act);
  for (std::size_t i = 0; i < d_act.v.size(); ++i) d_act.v[i] *= gelu_grad(c.ff_pre.v[i]);
  Mat d_h2;
  linear_bwd(P, s.ff1, c.h2, d_act, G, &d_h2);
  Mat d_mid;
  norm_bwd(P, s.ln2, d_h2, c.ln2, G, d_mid);
  add_into(d_mid, dout);

  Mat d_ctx;
  linear_bwd(P, s.proj, c.ctx, d_mid, G, &d_ctx);
  Mat d_qkv(N, 3 * D);
  Mat dA(N, N);
  const double* qkv = c.qkv.v.data();
  for (int h = 0; h < heads; ++h) {
    const Mat& A = c.attn[static_cast<std::size_t>(h)];
    const double* dO = d_ctx.v.data() + h * dh;
    kernels::gemm_tn({N, N, dh, A.v.data(), N, dO, D, d_qkv.v.data() + 2 * D + h * dh, 3 * D, false});
    kernels::gemm_nt({N, dh, N, dO, D, qkv + 2 * D + h * dh, 3 * D, dA.v.data(), N, false});
    for (int i = 0; i < N; ++i) {
      const double* a = A.row(i);
      double* d = dA.row(i);
      double dot = 0.0;
      for (int j = 0; j < N; ++j) dot += d[j] * a[j];
      for (int j = 0; j < N; ++j) d[j] = a[j] * (d[j] - dot) * scale;
    }
    kernels::gemm_nn({N, N, dh, dA.v.data(), N, qkv + D + h * dh, 3 * D, d_qkv.v.data() + h * dh, 3 * D, false});
    kernels::gemm_tn({N, N, dh, dA.v.data(), N, qkv + h * dh, 3 * D, d_qkv.v.data() + D + h * dh, 3 * D, false});
  }
  Mat d_h1;
  linear_bwd(P, s.qkv, c.h1, d_qkv, G, &d_h1);
  Mat d_in;
  norm_bwd(P, s.ln1, d_h1, c.ln1, G, d_in);
  add_into(d_in, d_mid);
  return d_in;
}

struct BranchCache {
  Mat tokens;
  std::vector<BlockCache> blocks;
  NormCache norm;
  Mat normed;
  std::vector<double> pooled;
  std::vector<double> feature;
};

void check_finite(const Mat& m, const std::string& where) {
  for (double v : m.v)
    if (!std::isfinite(v)) throw NumericError("non-finite activation in " + where);
}

void branch_fwd(const double* P, const BranchSpec& s, int heads, BranchCache& c) {
  Mat x;
  linear_fwd(P, s.embed, c.tokens, x);
  const double* pos = P + s.pos;
  for (std::size_t i = 0; i < x.v.size(); ++i) x.v[i] += pos[i];
  check_finite(x, s.name + " branch embedding");
  c.blocks.resize(s.blocks.size());
  for (std::size_t b = 0; b < s.blocks.size(); ++b) {
    x = block_fwd(P, s.blocks[b], heads, x, c.blocks[b]);
    check_finite(x, s.name + " branch, block " + std::to_string(b));
  }
  norm_fwd(P, s.norm, x, c.normed, c.norm);
  const int D = x.cols;
  c.pooled.assign(static_cast<std::size_t>(D), 0.0);
  for (int i = 0; i < x.rows; ++i)
    for (int j = 0; j < D; ++j) c.pooled[static_cast<std::size_t>(j)] += c.normed.at(i, j);
  for (double& v : c.pooled) v /= x.rows;
  const int F = s.feature.out;
  c.feature.assign(P + s.feature.b, P + s.feature.b + F);
  kernels::gemm_nn({1, D, F, c.pooled.data(), D, P + s.feature.w, F, c.feature.data(), F, true});
  for (double v : c.feature)
    if (!std::isfinite(v)) throw NumericError("non-finite activation in " + s.name + " branch feature");
}

void branch_bwd(const double* P, const BranchSpec& s, int heads, const BranchCache& c, std::span<const double> dfeat,
                double* G) {
  const int D = static_cast<int>(c.pooled.size()), F = s.feature.out;
  const int N = c.normed.rows;
  kernels::gemm_tn({1, D, F, c.pooled.data(), D, dfeat.data(), F, G + s.feature.w, F, true});
  for (int j = 0; j < F; ++j) G[s.feature.b + j] += dfeat[static_cast<std::size_t>(j)];
  std::vector<double> dpooled(static_cast<std::size_t>(D));
  kernels::gemm_nt({1, F, D, dfeat.data(), F, P + s.feature.w, F, dpooled.data(), D, false});
  Mat dnormed(N, D);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < D; ++j) dnormed.at(i, j) = dpooled[static_cast<std::size_t>(j)] / N;
  Mat dx;
  norm_bwd(P, s.norm, dnormed, c.norm, G, dx);
  for (std::size_t b = s.blocks.size(); b-- > 0;) dx = block_bwd(P, s.blocks[b], heads, c.blocks[b], dx, G);
  double* gpos = G + s.pos;
  for (std::size_t i = 0; i < dx.v.size(); ++i) gpos[i] += dx.v[i];
  linear_bwd(P, s.embed, c.tokens, dx, G, nullptr);
}

}  // namespace

struct FusionNet::Impl {
  std::array<BranchSpec, 3> branches;
  LinearSpec head;
  int heads = 1;
};

Prediction make_prediction(std::vector<double> logits) {
  Prediction p;
  p.probs = logits;
  kernels::serial::softmax_rows(p.probs.data(), 1, static_cast<int>(p.probs.size()), static_cast<int>(p.probs.size()));
  int best = 0;
  for (int i = 1; i < static_cast<int>(logits.size()); ++i)
    if (logits[static_cast<std::size_t>(i)] > logits[static_cast<std::size_t>(best)]) best = i;
  p.label = class_from_index(best);
  p.confidence = p.probs[static_cast<std::size_t>(best)];
  p.logits = std::move(logits);
  return p;
}

FusionNet::FusionNet(FusionConfig config) : config_(config), layout_(std::make_shared<ParamLayout>()) {
  config_.validate();
  auto impl = std::make_shared<Impl>();
  impl->heads = config_.heads;
  impl->branches[0] = add_branch(*layout_, "top", config_.video_tokens(), config_.tubelet_volume(), config_);
  impl->branches[1] = add_branch(*layout_, "bottom", config_.video_tokens(), config_.tubelet_volume(), config_);
  impl->branches[2] = add_branch(*layout_, "imu", config_.imu_tokens(), config_.imu_token_width(), config_);
  impl->head = add_linear(*layout_, "head", 3 * config_.feature_dim, config_.num_classes);
  impl_ = std::move(impl);
}

void FusionNet::check_input(const pipeline::ModelInput& in) const {
  const auto px = static_cast<std::size_t>(config_.window) * config_.side * config_.side;
  if (in.frames != config_.window || in.side != config_.side || in.top.size() != px || in.bottom.size() != px ||
      in.imu.size() != static_cast<std::size_t>(config_.window) * kImuBlockWidth)
    throw DataError("model: input shape " + std::to_string(in.frames) + "x" + std::to_string(in.side) +
                    " does not match config " + std::to_string(config_.window) + "x" + std::to_string(config_.side));
}

Mat FusionNet::tubelets(std::span<const float> video) const {
  const int t = config_.tubelet_t, p = config_.patch, S = config_.side;
  const int nt = config_.window / t, ns = S / p;
  Mat m(nt * ns * ns, t * p * p);
  for (int ti = 0; ti < nt; ++ti)
    for (int yi = 0; yi < ns; ++yi)
      for (int xi = 0; xi < ns; ++xi) {
        double* row = m.row((ti * ns + yi) * ns + xi);
        for (int dt = 0; dt < t; ++dt)
          for (int dy = 0; dy < p; ++dy) {
            const float* src = video.data() + (static_cast<std::size_t>(ti * t + dt) * S + (yi * p + dy)) * S + xi * p;
            double* dst = row + (dt * p + dy) * p;
            for (int dx = 0; dx < p; ++dx) dst[dx] = src[dx];
          }
      }
  return m;
}

namespace {

Mat imu_tokens(const FusionConfig& c, std::span<const float> imu) {
  Mat m(c.imu_tokens(), c.imu_token_width());
  for (std::size_t i = 0; i < m.v.size(); ++i) m.v[i] = imu[i];
  return m;
}

}  // namespace

Mat FusionNet::tubelet_embed(std::span<const float> video, const Params& p, Branch which) const {
  const auto& s = impl_->branches[static_cast<std::size_t>(which)];
  Mat x;
  linear_fwd(p.data(), s.embed, tubelets(video), x);
  const double* pos = p.data() + s.pos;
  for (std::size_t i = 0; i < x.v.size(); ++i) x.v[i] += pos[i];
  return x;
}

namespace {

struct ForwardState {
  std::array<BranchCache, 3> branch;
  std::array<bool, 3> on{};
  std::vector<double> concat;
  Prediction pred;
};

}  // namespace

static void forward_all(const FusionNet& net, const FusionNet::Impl& impl, const pipeline::ModelInput& in,
                        const Params& p, BranchMask mask, ForwardState& st) {
  const auto& c = net.config();
  const int F = c.feature_dim;
  st.on = {mask.top, mask.bottom, mask.imu};
  st.concat.assign(static_cast<std::size_t>(3 * F), 0.0);
  for (int b = 0; b < 3; ++b) {
    if (!st.on[static_cast<std::size_t>(b)]) continue;
    auto& cache = st.branch[static_cast<std::size_t>(b)];
    if (b == 0) cache.tokens = net.tubelets(in.top);
    else if (b == 1) cache.tokens = net.tubelets(in.bottom);
    else cache.tokens = imu_tokens(c, in.imu);
    branch_fwd(p.data(), impl.branches[static_cast<std::size_t>(b)], impl.heads, cache);
    std::copy(cache.feature.begin(), cache.feature.end(), st.concat.begin() + b * F);
  }
  std::vector<double> logits(p.data() + impl.head.b, p.data() + impl.head.b + c.num_classes);
  kernels::gemm_nn({1, 3 * F, c.num_classes, st.concat.data(), 3 * F, p.data() + impl.head.w, c.num_classes,
                    logits.data(), c.num_classes, true});
  for (double v : logits)
    if (!std::isfinite(v)) throw NumericError("non-finite logits");
  st.pred = make_prediction(std::move(logits));
}

std::vector<double> FusionNet::branch_features(const pipeline::ModelInput& in, const Params& p, Branch which) const {
  check_input(in);
  BranchCache cache;
  if (which == Branch::Top) cache.tokens = tubelets(in.top);
  else if (which == Branch::Bottom) cache.tokens = tubelets(in.bottom);
  else cache.tokens = imu_tokens(config_, in.imu);
  branch_fwd(p.data(), impl_->branches[static_cast<std::size_t>(which)], impl_->heads, cache);
  return cache.feature;
}

Prediction FusionNet::fuse_classify(std::span<const double> f_top, std::span<const double> f_bottom,
                                    std::span<const double> f_imu, const Params& p) const {
  const int F = config_.feature_dim;
  if (static_cast<int>(f_top.size()) != F || static_cast<int>(f_bottom.size()) != F ||
      static_cast<int>(f_imu.size()) != F)
    throw DataError("fuse_classify: feature width mismatch");
  std::vector<double> concat;
  concat.insert(concat.end(), f_top.begin(), f_top.end());
  concat.insert(concat.end(), f_bottom.begin(), f_bottom.end());
  concat.insert(concat.end(), f_imu.begin(), f_imu.end());
  const auto& h = impl_->head;
  std::vector<double> logits(p.data() + h.b, p.data() + h.b + config_.num_classes);
  kernels::gemm_nn({1, 3 * F, config_.num_classes, concat.data(), 3 * F, p.data() + h.w, config_.num_classes,
                    logits.data(), config_.num_classes, true});
  return make_prediction(std::move(logits));
}

Prediction FusionNet::predict(const pipeline::ModelInput& in, const Params& p, BranchMask mask) const {
  check_input(in);
  ForwardState st;
  forward_all(*this, *impl_, in, p, mask, st);
  return std::move(st.pred);
}

Prediction FusionNet::predict_window(const pipeline::Window& w, const Params& p, BranchMask mask) const {
  return predict(pipeline::to_model_input(w), p, mask);
}

BatchResult FusionNet::loss_and_grad(std::span<const Example> batch, const Params& p, std::vector<double>& grad,
                                     BranchMask mask) const {
  if (batch.empty()) throw DataError("loss_and_grad: empty batch");
  const std::size_t P = layout_->total();
  const int B = static_cast<int>(batch.size());
  const int F = config_.feature_dim;
  std::vector<double> per(P * static_cast<std::size_t>(B), 0.0);
  std::vector<double> losses(static_cast<std::size_t>(B), 0.0);
  std::vector<int> hits(static_cast<std::size_t>(B), 0);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(B));

#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < B; ++i) {
    try {
      const Example& ex = batch[static_cast<std::size_t>(i)];
      check_input(*ex.input);
      if (ex.label < 0 || ex.label >= config_.num_classes) throw DataError("loss_and_grad: label out of range");
      ForwardState st;
      forward_all(*this, *impl_, *ex.input, p, mask, st);
      const auto& probs = st.pred.probs;
      losses[static_cast<std::size_t>(i)] = -std::log(std::max(probs[static_cast<std::size_t>(ex.label)], 1e-300));
      hits[static_cast<std::size_t>(i)] = class_index(st.pred.label) == ex.label ? 1 : 0;
      double* G = per.data() + P * static_cast<std::size_t>(i);
      std::vector<double> dz = probs;
      dz[static_cast<std::size_t>(ex.label)] -= 1.0;
      const auto& h = impl_->head;
      kernels::gemm_tn({1, 3 * F, config_.num_classes, st.concat.data(), 3 * F, dz.data(), config_.num_classes,
                        G + h.w, config_.num_classes, true});
      for (int j = 0; j < config_.num_classes; ++j) G[h.b + j] += dz[static_cast<std::size_t>(j)];
      std::vector<double> dconcat(static_cast<std::size_t>(3 * F));
      kernels::gemm_nt({1, config_.num_classes, 3 * F, dz.data(), config_.num_classes, p.data() + h.w,
                        config_.num_classes, dconcat.data(), 3 * F, false});
      for (int b = 0; b < 3; ++b) {
        if (!st.on[static_cast<std::size_t>(b)]) continue;
        branch_bwd(p.data(), impl_->branches[static_cast<std::size_t>(b)], impl_->heads,
                   st.branch[static_cast<std::size_t>(b)],
                   std::span<const double>(dconcat).subspan(static_cast<std::size_t>(b * F), static_cast<std::size_t>(F)),
                   G);
      }
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  grad.assign(P, 0.0);
  BatchResult r;
  for (int i = 0; i < B; ++i) {
    const double* g = per.data() + P * static_cast<std::size_t>(i);
    for (std::size_t k = 0; k < P; ++k) grad[k] += g[k];
    r.loss += losses[static_cast<std::size_t>(i)];
    r.correct += static_cast<std::size_t>(hits[static_cast<std::size_t>(i)]);
  }
  const double inv = 1.0 / B;
  for (double& g : grad) g *= inv;
  r.loss *= inv;
  if (!std::isfinite(r.loss)) throw NumericError("non-finite loss");
  return r;
}

double FusionNet::loss(std::span<const Example> batch, const Params& p, BranchMask mask) const {
  if (batch.empty()) throw DataError("loss: empty batch");
  double total = 0.0;
  for (const auto& ex : batch) {
    Prediction pr = predict(*ex.input, p, mask);
    total += -std::log(std::max(pr.probs[static_cast<std::size_t>(ex.label)], 1e-300));
  }
  return total / static_cast<double>(batch.size());
}

Mat attention_probs(const FusionNet& net, const pipeline::ModelInput& in, const Params& p, Branch which) {
  const auto& c = net.config();
  if (c.depth < 1) throw ConfigError("attention_probs: model has no encoder blocks");
  Mat x;
  if (which == Branch::Imu) {
    // Reuse the public pieces: embed imu tokens manually.
    Mat tok(c.imu_tokens(), c.imu_token_width());
    for (std::size_t i = 0; i < tok.v.size(); ++i) tok.v[i] = in.imu[i];
    const auto& g = p.layout().group("imu.embed.w");
    const auto& gb = p.layout().group("imu.embed.b");
    LinearSpec e{g.offset, gb.offset, c.imu_token_width(), c.embed_dim};
    linear_fwd(p.data(), e, tok, x);
    const auto pos = p.group("imu.pos");
    for (std::size_t i = 0; i < x.v.size(); ++i) x.v[i] += pos[i];
  } else {
    x = net.tubelet_embed(which == Branch::Top ? std::span<const float>(in.top) : std::span<const float>(in.bottom),
                          p, which);
  }
  const std::string prefix = std::string(which == Branch::Top ? "top" : which == Branch::Bottom ? "bottom" : "imu") +
                             ".block0.";
  auto lin = [&](const std::string& n, int in_dim, int out_dim) {
    return LinearSpec{p.layout().group(prefix + n + ".w").offset, p.layout().group(prefix + n + ".b").offset, in_dim,
                      out_dim};
  };
  auto nrm = [&](const std::string& n) {
    return NormSpec{p.layout().group(prefix + n + ".g").offset, p.layout().group(prefix + n + ".b").offset, c.embed_dim};
  };
  BlockSpec s{nrm("ln1"), lin("qkv", c.embed_dim, 3 * c.embed_dim), lin("proj", c.embed_dim, c.embed_dim),
              nrm("ln2"), lin("ff1", c.embed_dim, c.ff_mult * c.embed_dim),
              lin("ff2", c.ff_mult * c.embed_dim, c.embed_dim)};
  BlockCache cache;
  block_fwd(p.data(), s, c.heads, x, cache);
  return cache.attn[0];
}

}  // namespace mmhar::model
