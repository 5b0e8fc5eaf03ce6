#include "dhap/model.hpp"

#include <stdexcept>

namespace dhap {

using corpus::Vocabulary;
using num::Init;
using num::Real;
using num::Tensor;

namespace {

std::vector<Real> values_of(Var v) {
  if (!v.valid()) return {};
  auto s = v.value().values();
  return {s.begin(), s.end()};
}

std::uint64_t fnv1a(std::uint64_t h, std::uint64_t x) {
  for (int i = 0; i < 8; ++i) {
    h ^= (x >> (8 * i)) & 0xffu;
    h *= 0x100000001b3ull;
  }
  return h;
}

Var sum_scalars(Tape& tape, const std::vector<Var>& terms) {
  if (terms.empty()) return tape.constant(Tensor::zeros(1, 1));
  return num::sum(num::stack_rows(terms));
}

}  // namespace

ModelInput encode_input(const std::vector<std::string>& post, const std::vector<corpus::DialoguePair>& history,
                        const Vocabulary& vocab) {
  ModelInput in;
  in.post = vocab.encode(post);
  for (const auto& pair : history) {
    in.history_posts.push_back(vocab.encode(pair.post.tokens));
    in.history_responses.push_back(vocab.encode(pair.response.tokens));
  }
  return in;
}

ModelExample encode_example(const corpus::TrainingExample& ex, const Vocabulary& vocab) {
  ModelExample out{encode_input(ex.post.tokens, ex.history, vocab), vocab.encode(ex.response.tokens)};
  out.target.push_back(Vocabulary::kEos);
  return out;
}

std::uint64_t ProfileCache::key(const ModelInput& input) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto feed = [&](const std::vector<std::vector<TokenId>>& seqs) {
    h = fnv1a(h, seqs.size());
    for (const auto& s : seqs) {
      h = fnv1a(h, s.size());
      for (TokenId t : s) h = fnv1a(h, static_cast<std::uint64_t>(static_cast<std::int64_t>(t)));
    }
  };
  feed(input.history_responses);
  return h;
}

const ProfileCache::Entry* ProfileCache::find(std::uint64_t key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return nullptr;
  ++hits_;
  return &it->second;
}

void ProfileCache::put(std::uint64_t key, Entry entry) {
  ++encodings_;
  entries_[key] = std::move(entry);
}

// ---------------------------------------------------------------------------

DhapModel::DhapModel(const ModelConfig& config)
    : config_((config.validate(), config)),
      init_rng_(config.seed),
      word_embedding_(&params_.add("word_embedding", {config.vocab_size, config.d_emb}, Init::kNormal, init_rng_)),
      history_(params_, config_, init_rng_),
      post_(params_, config_, *word_embedding_, init_rng_),
      memory_(params_, config_, init_rng_),
      decoder_(params_, config_, *word_embedding_, init_rng_) {}

DhapModel::Encoded DhapModel::encode(Tape& tape, const ModelInput& input, ProfileCache* cache) const {
  if (input.history_posts.size() != input.history_responses.size()) {
    throw std::invalid_argument("history posts and responses differ in count");
  }
  Encoded enc;
  HistoryEncoding history;
  const ProfileCache::Entry* hit = nullptr;
  std::uint64_t key = 0;
  if (cache) {
    key = ProfileCache::key(input);
    hit = cache->find(key);
  }
  if (hit) {
    enc.sequence = hit->sequence;
    history.general = tape.constant(hit->general);
    history.contextual = tape.constant(hit->contextual);
    history.spans = hit->sequence.spans;
  } else {
    enc.sequence = pack_history(input.history_responses, config_.max_positions);
    history = history_.encode(tape, enc.sequence);
    if (cache) cache->put(key, {enc.sequence, history.general.value(), history.contextual.value()});
  }

  const Var zeros_t = tape.constant(Tensor::zeros(1, config_.d_transformer));
  const Variant& v = config_.variant;
  enc.general_fed = v.zero_general() ? zeros_t : history.general;
  enc.zero_dynamic = zeros_t;

  Var h0 = v.random_post_init() ? post_.random_init_state(tape) : post_.init_state(tape, history.general);
  enc.post = post_.encode(tape, input.post, h0);
  enc.post_attention = post_.prepare_attention(enc.post);

  std::vector<std::vector<TokenId>> kept_posts(input.history_posts.begin() +
                                                   static_cast<std::ptrdiff_t>(enc.sequence.first_kept),
                                               input.history_posts.end());
  enc.memory = memory_.build(tape, kept_posts, history, enc.sequence, post_);
  if (!enc.memory.empty()) enc.memory_attention = memory_.prepare(enc.memory);
  if (enc.memory.can_copy()) enc.copy_attention = decoder_.prepare_copy(enc.memory);
  return enc;
}

Var DhapModel::initial_state(Tape& tape, const Encoded& enc) const { return decoder_.init(tape, enc.post); }

DhapModel::StepVars DhapModel::step(Tape& tape, const Encoded& enc, Var h_prev, TokenId previous,
                                    std::size_t t) const {
  StepVars s;
  num::AttentionResult post = post_.attend(h_prev, enc.post_attention);
  s.context = post.context;
  s.post_weights = post.weights;
  s.profile = memory_.dynamic_profile(tape, s.context, enc.memory,
                                      enc.memory_attention ? &*enc.memory_attention : nullptr, t);
  s.dynamic_fed = config_.variant.zero_dynamic() ? enc.zero_dynamic : s.profile.vector;
  s.state = decoder_.step(tape, h_prev, previous, s.context, enc.general_fed, s.dynamic_fed);

  Var features = PersonalizedDecoder::features(s.state, s.context, enc.general_fed, s.dynamic_fed);
  s.modes = decoder_.mode_switch(tape, features, config_.variant, enc.memory.can_copy());
  s.general = decoder_.general_dist(tape, features);
  if (enc.copy_attention) s.copy_weights = decoder_.copy_attention(tape, s.context, *enc.copy_attention).weights;
  return s;
}

Var DhapModel::token_probability(const Encoded& enc, const StepVars& s, TokenId y) const {
  Var gen = num::element(s.general, 0, static_cast<std::size_t>(y));
  Var p = s.modes.gen_off ? Var{} : num::mul(s.modes.p_gen, gen);
  if (!s.modes.copy_off && s.copy_weights.valid()) {
    std::vector<std::size_t> positions;
    for (std::size_t i = 0; i < enc.memory.copy_tokens.size(); ++i) {
      if (enc.memory.copy_tokens[i] == y) positions.push_back(i);
    }
    if (!positions.empty()) {
      Var copied = num::mul(s.modes.p_copy, num::sum_at(s.copy_weights, positions));
      p = p.valid() ? num::add(p, copied) : copied;
    }
  }
  if (!p.valid()) p = gen.tape->constant(Tensor::zeros(1, 1));
  return p;
}

Var DhapModel::negative_log_likelihood(Tape& tape, const ModelExample& example) const {
  if (example.target.empty()) throw std::invalid_argument("empty target");
  Encoded enc = encode(tape, example.input);
  Var h = initial_state(tape, enc);
  // Without the general mode a target token outside the copy store has zero
  // probability; a small floor keeps the loss finite.
  const bool floor = config_.variant.kind == VariantKind::kNoGenerate;
  std::vector<Var> terms;
  TokenId previous = Vocabulary::kBos;
  for (std::size_t t = 0; t < example.target.size(); ++t) {
    StepVars s = step(tape, enc, h, previous, t);
    Var p = token_probability(enc, s, example.target[t]);
    if (floor) p = num::clamp_min(p, Real(1e-10));
    terms.push_back(num::log(p));
    h = s.state;
    previous = example.target[t];
  }
  return num::scale(sum_scalars(tape, terms), Real(-1));
}

namespace {

/// Holds the encoder outputs of one query as plain tensors; each step replays
/// them as constants on a fresh value-only tape.
struct FrozenDhap {
  HistorySequence sequence;
  Tensor general_fed;
  Tensor post_states;
  Tensor zero_dynamic;
  Tensor memory_keys, memory_values, copy_states;
  std::vector<TokenId> copy_tokens;
  std::vector<std::size_t> copy_owner;
  std::size_t memory_size = 0;
};

class DhapSession final : public DecodingSession {
 public:
  DhapSession(const DhapModel& model, std::shared_ptr<const FrozenDhap> frozen, Tensor state)
      : model_(&model), frozen_(std::move(frozen)), state_(std::move(state)) {}

  std::unique_ptr<DecodingSession> clone() const override { return std::make_unique<DhapSession>(*this); }
  std::size_t steps() const override { return steps_; }

  StepInfo advance(TokenId previous) override {
    Tape tape(false);
    DhapModel::Encoded enc = thaw(tape);
    DhapModel::StepVars s = model_->step(tape, enc, tape.constant(state_), previous, steps_);

    StepInfo info;
    info.step = steps_;
    info.dist.p_gen = s.modes.p_gen.scalar();
    info.dist.p_copy = s.modes.p_copy.scalar();
    info.dist.general = values_of(s.general);
    if (s.copy_weights.valid()) {
      info.dist.copy = aggregate_copy(s.copy_weights.value().values(), frozen_->copy_tokens);
    }
    // copy_off implies p_g = 1, so the mixture is the general distribution itself.
    info.dist.mixed = s.modes.copy_off ? info.dist.general
                                       : mix(info.dist.p_gen, info.dist.p_copy, info.dist.general, info.dist.copy);
    info.post_weights = values_of(s.post_weights);
    info.memory_weights = values_of(s.profile.weights);
    info.memory_offset = frozen_->sequence.first_kept;
    info.dynamic_fed = values_of(s.dynamic_fed);
    info.general_fed = values_of(enc.general_fed);

    state_ = s.state.value();
    ++steps_;
    return info;
  }

 private:
  DhapModel::Encoded thaw(Tape& tape) const {
    const FrozenDhap& f = *frozen_;
    DhapModel::Encoded enc;
    enc.sequence = f.sequence;
    enc.general_fed = tape.constant(f.general_fed);
    enc.zero_dynamic = tape.constant(f.zero_dynamic);
    enc.post.states = tape.constant(f.post_states);
    enc.post.length = f.post_states.rows();
    enc.post_attention = model_->post_encoder().prepare_attention(enc.post);
    enc.memory.size = f.memory_size;
    enc.memory.copy_tokens = f.copy_tokens;
    enc.memory.copy_owner = f.copy_owner;
    if (f.memory_size > 0) {
      enc.memory.keys = tape.constant(f.memory_keys);
      enc.memory.values = tape.constant(f.memory_values);
      enc.memory_attention = model_->memory_reader().prepare(enc.memory);
    }
    if (!f.copy_tokens.empty()) {
      enc.memory.copy_states = tape.constant(f.copy_states);
      enc.copy_attention = model_->decoder().prepare_copy(enc.memory);
    }
    return enc;
  }

  const DhapModel* model_;
  std::shared_ptr<const FrozenDhap> frozen_;
  Tensor state_;
  std::size_t steps_ = 0;
};

}  // namespace

std::unique_ptr<DecodingSession> DhapModel::start(const ModelInput& input, ProfileCache* cache) const {
  Tape tape(false);
  Encoded enc = encode(tape, input, cache);
  auto frozen = std::make_shared<FrozenDhap>();
  frozen->sequence = enc.sequence;
  frozen->general_fed = enc.general_fed.value();
  frozen->zero_dynamic = enc.zero_dynamic.value();
  frozen->post_states = enc.post.states.value();
  frozen->memory_size = enc.memory.size;
  if (!enc.memory.empty()) {
    frozen->memory_keys = enc.memory.keys.value();
    frozen->memory_values = enc.memory.values.value();
  }
  frozen->copy_tokens = enc.memory.copy_tokens;
  frozen->copy_owner = enc.memory.copy_owner;
  if (enc.memory.can_copy()) frozen->copy_states = enc.memory.copy_states.value();
  Tensor h0 = initial_state(tape, enc).value();
  return std::make_unique<DhapSession>(*this, std::move(frozen), std::move(h0));
}

// ---------------------------------------------------------------------------

Seq2SeqModel::Seq2SeqModel(const ModelConfig& config) : config_((config.validate(), config)), init_rng_(config.seed) {
  const std::size_t dg = config.d_gru;
  word_embedding_ = &params_.add("word_embedding", {config.vocab_size, config.d_emb}, Init::kNormal, init_rng_);
  forward_ = num::GruParams::create(params_, "post.gru_forward", config.d_emb, dg, init_rng_);
  backward_ = num::GruParams::create(params_, "post.gru_backward", config.d_emb, dg, init_rng_);
  attention_ = num::AttentionParams::create(params_, "post.attention", dg, 2 * dg, config.attention_width(), init_rng_);
  init_w_ = &params_.add("decoder.init_w", {dg, 2 * dg}, Init::kFanIn, init_rng_);
  init_b_ = &params_.add("decoder.init_b", {dg}, Init::kZeros, init_rng_);
  gru_ = num::GruParams::create(params_, "decoder.gru", config.d_emb + 2 * dg, dg, init_rng_);
  head_ = OutputHead(params_, "decoder.general", 3 * dg, 3 * dg, config.vocab_size, init_rng_);
}

namespace {

PostEncoding encode_plain_post(Tape& tape, num::Parameter& table, const num::GruParams& fwd,
                               const num::GruParams& bwd, std::span<const TokenId> post, std::size_t d_gru) {
  if (post.empty()) throw std::invalid_argument("cannot encode an empty post");
  Var x = num::embedding(tape.param(table), post);
  Var h0 = tape.constant(Tensor::zeros(1, d_gru));
  Var states = num::concat_cols({num::gru_sequence(x, h0, fwd, false), num::gru_sequence(x, h0, bwd, true)});
  return {states, num::slice_rows(states, post.size() - 1, 1), post.size()};
}

}  // namespace

Var Seq2SeqModel::initial_state(Tape& tape, const PostEncoding& post) const {
  return num::relu(num::linear(post.final_state, tape.param(*init_w_), tape.param(*init_b_)));
}

Seq2SeqModel::StepVars Seq2SeqModel::step(Tape& tape, const num::AttentionMemory& post_attention, Var h_prev,
                                          TokenId previous) const {
  StepVars s;
  num::AttentionResult a = num::additive_attention(h_prev, post_attention, attention_);
  s.context = a.context;
  s.post_weights = a.weights;
  const TokenId ids[1] = {previous};
  Var y = num::embedding(tape.param(*word_embedding_), ids);
  s.state = num::gru_cell(num::concat_cols({y, s.context}), h_prev, gru_);
  s.general = head_.distribution(tape, num::concat_cols({s.state, s.context}));
  return s;
}

Var Seq2SeqModel::negative_log_likelihood(Tape& tape, const ModelExample& example) const {
  if (example.target.empty()) throw std::invalid_argument("empty target");
  PostEncoding post =
      encode_plain_post(tape, *word_embedding_, forward_, backward_, example.input.post, config_.d_gru);
  num::AttentionMemory mem = num::prepare_attention(post.states, post.states, attention_);
  Var h = initial_state(tape, post);
  std::vector<Var> terms;
  TokenId previous = Vocabulary::kBos;
  for (TokenId y : example.target) {
    StepVars s = step(tape, mem, h, previous);
    terms.push_back(num::log(num::element(s.general, 0, static_cast<std::size_t>(y))));
    h = s.state;
    previous = y;
  }
  return num::scale(sum_scalars(tape, terms), Real(-1));
}

namespace {

class Seq2SeqSession final : public DecodingSession {
 public:
  Seq2SeqSession(const Seq2SeqModel& model, const num::AttentionParams& attention,
                 std::shared_ptr<const Tensor> post_states, Tensor state)
      : model_(&model), attention_(&attention), post_states_(std::move(post_states)), state_(std::move(state)) {}

  std::unique_ptr<DecodingSession> clone() const override { return std::make_unique<Seq2SeqSession>(*this); }
  std::size_t steps() const override { return steps_; }

  StepInfo advance(TokenId previous) override {
    Tape tape(false);
    Var states = tape.constant(*post_states_);
    num::AttentionMemory mem = num::prepare_attention(states, states, *attention_);
    Seq2SeqModel::StepVars s = model_->step(tape, mem, tape.constant(state_), previous);
    StepInfo info;
    info.step = steps_;
    info.dist.p_gen = 1.0;
    info.dist.p_copy = 0.0;
    info.dist.general = values_of(s.general);
    info.dist.mixed = info.dist.general;
    info.post_weights = values_of(s.post_weights);
    state_ = s.state.value();
    ++steps_;
    return info;
  }

 private:
  const Seq2SeqModel* model_;
  const num::AttentionParams* attention_;
  std::shared_ptr<const Tensor> post_states_;
  Tensor state_;
  std::size_t steps_ = 0;
};

}  // namespace

std::unique_ptr<DecodingSession> Seq2SeqModel::start(const ModelInput& input, ProfileCache*) const {
  Tape tape(false);
  PostEncoding post = encode_plain_post(tape, *word_embedding_, forward_, backward_, input.post, config_.d_gru);
  auto states = std::make_shared<const Tensor>(post.states.value());
  Tensor h0 = initial_state(tape, post).value();
  return std::make_unique<Seq2SeqSession>(*this, attention_, std::move(states), std::move(h0));
}

std::unique_ptr<ResponseModel> make_model(const ModelConfig& config) {
  if (config.variant.kind == VariantKind::kSeq2Seq) return std::make_unique<Seq2SeqModel>(config);
  return std::make_unique<DhapModel>(config);
}

}  // namespace dhap
