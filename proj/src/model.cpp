#include "lightk/model.hpp"

#include <deque>

#include "lightk/errors.hpp"

namespace lightk {

Model::Model(const TrainConfig& cfg, std::size_t in_features, std::size_t classes, std::uint64_t seed)
    : cfg_(cfg) {
  cfg_.validate();
  if (in_features == 0) throw ConfigError("model: input must have at least one feature channel");
  if (classes < 2) throw ConfigError("model: need at least 2 classes");
  std::mt19937_64 rng(seed);
  const auto hidden = static_cast<std::size_t>(cfg_.hidden);
  const PoolFlags flags{cfg_.nf, cfg_.pn, cfg_.pe};
  for (int b = 0; b < cfg_.layers; ++b) {
    const std::string prefix = "block" + std::to_string(b);
    Block block{LiConvParams::init(prefix + ".conv", b == 0 ? in_features : hidden, hidden, cfg_.k, rng),
                std::nullopt};
    if (cfg_.pooling()) {
      block.pool = KPoolParams::init(prefix + ".pool", hidden, cfg_.k, cfg_.rho_v, cfg_.rho_e, flags, rng);
    }
    blocks_.push_back(std::move(block));
  }
  head_ = MlpParams::init(2 * hidden, hidden, classes, rng);
}

Model::Output Model::forward(Tape& tape, const Batch& batch, std::mt19937_64* rng) {
  Output out;
  const KernelKind kernel = kernel_of(cfg_.conv);
  // Pooled batches must outlive this call's use of them; the deque keeps
  // references stable.
  std::deque<Batch> pooled;
  const Batch* current = &batch;
  std::optional<PropagationPlan> plan;

  Var x = tape.constant(batch.graph.features());
  Var summed;
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    Block& block = blocks_[b];
    if (!plan || block.pool) plan = PropagationPlan::build(current->graph, kernel, cfg_.k);
    ConvOutput conv = liconv_forward(*plan, x, block.conv);
    if (block.pool) {
      PoolResult pr = pool_forward(*current, conv.anchors, conv.out, *block.pool);
      check_pool_invariants(*current, pr, *block.pool);
      ++out.pool_checks;
      x = pr.x;
      pooled.push_back(std::move(pr.batch));
      current = &pooled.back();
      plan.reset();
    } else {
      x = ad::relu(conv.out);
    }
    const Var r = readout(x, *current);
    summed = b == 0 ? r : ad::add(summed, r);
  }
  out.logits = classifier_forward(summed, head_, cfg_.dropout, rng);
  return out;
}

std::vector<Parameter*> Model::parameters() {
  std::vector<Parameter*> out;
  for (auto& b : blocks_) {
    out.push_back(&b.conv.weight);
    out.push_back(&b.conv.merge);
    out.push_back(&b.conv.bias);
    if (b.pool) out.push_back(&b.pool->theta);
  }
  for (Parameter* p : {&head_.w1, &head_.b1, &head_.w2, &head_.b2}) out.push_back(p);
  return out;
}

std::vector<const Parameter*> Model::parameters() const {
  std::vector<const Parameter*> out;
  for (Parameter* p : const_cast<Model*>(this)->parameters()) out.push_back(p);
  return out;
}

ParamCount Model::param_count() const {
  ParamCount count;
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const auto& block = blocks_[b];
    const std::string prefix = "block" + std::to_string(b);
    count.per_layer.emplace_back(prefix + ".conv", block.conv.weight_count() + block.conv.bias.size());
    if (block.pool) count.per_layer.emplace_back(prefix + ".pool", block.pool->theta.size());
  }
  count.per_layer.emplace_back("classifier",
                               head_.w1.size() + head_.b1.size() + head_.w2.size() + head_.b2.size());
  for (const auto& [name, n] : count.per_layer) count.total += n;
  return count;
}

std::vector<Matrix> Model::snapshot() const {
  std::vector<Matrix> out;
  for (const Parameter* p : parameters()) out.push_back(p->value);
  return out;
}

void Model::restore(const std::vector<Matrix>& values) {
  auto params = parameters();
  if (values.size() != params.size()) throw ShapeError("model restore: tensor count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
}

std::size_t param_count(const Model* model) { return model ? model->param_count().total : 0; }

}  // namespace lightk
