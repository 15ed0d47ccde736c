#include "infogain/tabular.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "infogain/serialization.hpp"

namespace infogain {

double Rubric::score(const CatalogItem& item) const {
  double s = base;
  for (const auto& tag : item.tags) {
    auto it = tag_deltas.find(tag);
    if (it != tag_deltas.end()) s += it->second;
  }
  return std::clamp(s, 1.0, 5.0);
}

void TabularModel::validate() const {
  if (hypotheses.empty()) throw Error(ErrorCode::InvalidArgument, "tabular model has no hypotheses");
  if (prior.size() != hypotheses.size()) {
    throw Error(ErrorCode::InvalidArgument, "prior length does not match hypotheses");
  }
  double sum = 0.0;
  for (double p : prior) {
    if (!(p >= 0.0)) throw Error(ErrorCode::InvalidArgument, "negative prior weight");
    sum += p;
  }
  if (std::fabs(sum - 1.0) > CategoricalDistribution::kSumTolerance) {
    throw Error(ErrorCode::InvalidArgument, "prior does not sum to 1");
  }
  std::unordered_set<std::string> keys;
  for (const auto& h : hypotheses) {
    if (!keys.insert(h.key).second) throw Error(ErrorCode::InvalidArgument, "duplicate hypothesis: " + h.text);
  }
  if (likelihood.size() != question_bank.size()) {
    throw Error(ErrorCode::InvalidArgument, "likelihood table does not cover the question bank");
  }
  std::unordered_set<std::string> ids;
  for (std::size_t qi = 0; qi < question_bank.size(); ++qi) {
    const auto& q = question_bank[qi];
    q.validate();
    if (!ids.insert(q.id).second) throw Error(ErrorCode::InvalidArgument, "duplicate question id: " + q.id);
    if (likelihood[qi].size() != hypotheses.size()) {
      throw Error(ErrorCode::InvalidArgument, "missing likelihood rows for question " + q.id);
    }
    for (const auto& row : likelihood[qi]) {
      if (row.size() != q.options.size()) {
        throw Error(ErrorCode::InvalidArgument, "likelihood row width mismatch for question " + q.id);
      }
    }
  }
  if (true_target && *true_target >= hypotheses.size()) {
    throw Error(ErrorCode::InvalidArgument, "true target out of range");
  }
  if (!catalog.empty() && rubrics.size() != hypotheses.size()) {
    throw Error(ErrorCode::InvalidArgument, "a catalog needs one rubric per hypothesis");
  }
}

std::optional<std::size_t> TabularModel::find_hypothesis(std::string_view key) const {
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    if (hypotheses[i].key == key) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> TabularModel::find_question(std::string_view id) const {
  for (std::size_t i = 0; i < question_bank.size(); ++i) {
    if (question_bank[i].id == id) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> TabularModel::find_catalog_item(std::string_view title) const {
  const std::string key = normalize_key(title);
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    if (normalize_key(catalog[i].title) == key) return i;
  }
  return std::nullopt;
}

CategoricalDistribution TabularModel::row(const Question& q, std::size_t h) const {
  if (q.is_guess()) {
    return CategoricalDistribution::point_mass(2, normalize_key(*q.guess_of) == hypotheses.at(h).key ? 0 : 1);
  }
  auto qi = find_question(q.id);
  if (!qi) throw Error(ErrorCode::NotFound, "question not in the tabular bank: " + q.id);
  return likelihood[*qi].at(h);
}

std::vector<double> TabularModel::posterior(const History& history) const {
  return posterior(history, prior);
}

std::vector<double> TabularModel::posterior(const History& history, std::span<const double> start) const {
  if (start.size() != hypotheses.size()) throw Error(ErrorCode::InvalidArgument, "weight vector size mismatch");
  std::vector<double> w(start.begin(), start.end());
  for (const auto& [q, a] : history.pairs()) {
    for (std::size_t h = 0; h < w.size(); ++h) {
      if (w[h] > 0.0) w[h] *= row(q, h)[a.option_index];
    }
  }
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(total > 0.0)) return std::vector<double>(w.size(), 0.0);
  for (double& x : w) x /= total;
  return w;
}

TabularModel parse_tabular_model(std::string_view json_text) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("tabular model is not valid JSON: ") + e.what());
  }
  TabularModel m;
  try {
    for (const auto& h : j.at("hypotheses")) m.hypotheses.emplace_back(h.get<std::string>());
    if (j.contains("prior")) {
      m.prior = j.at("prior").get<std::vector<double>>();
      const double s = std::accumulate(m.prior.begin(), m.prior.end(), 0.0);
      if (s > 0.0) for (double& p : m.prior) p /= s;
    } else {
      m.prior.assign(m.hypotheses.size(), 1.0 / static_cast<double>(m.hypotheses.size()));
    }
    for (const auto& q : j.at("questions")) m.question_bank.push_back(question_from_json(q));
    const auto& lik = j.at("likelihood");
    for (const auto& q : m.question_bank) {
      std::vector<CategoricalDistribution> rows;
      for (const auto& r : lik.at(q.id)) {
        rows.push_back(CategoricalDistribution::normalized(r.get<std::vector<double>>()));
      }
      m.likelihood.push_back(std::move(rows));
    }
    if (j.contains("true_target")) {
      auto idx = m.find_hypothesis(normalize_key(j.at("true_target").get<std::string>()));
      if (!idx) throw Error(ErrorCode::InvalidArgument, "true_target is not a hypothesis");
      m.true_target = idx;
    }
    m.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("catalog")) {
      for (const auto& c : j.at("catalog")) {
        m.catalog.push_back({c.at("title").get<std::string>(), c.value("tags", std::vector<std::string>{})});
      }
    }
    if (j.contains("rubrics")) {
      for (const auto& r : j.at("rubrics")) {
        Rubric rb;
        rb.base = r.value("base", 3.0);
        if (r.contains("tags")) rb.tag_deltas = r.at("tags").get<std::map<std::string, double>>();
        m.rubrics.push_back(std::move(rb));
      }
    }
    m.recommendation_floor = j.value("recommendation_floor", 2.5);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("malformed tabular model: ") + e.what());
  }
  m.validate();
  return m;
}

TabularModel load_tabular_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open tabular model " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_tabular_model(ss.str());
}

std::string tabular_model_to_json(const TabularModel& model) {
  Json j;
  Json hyps = Json::array();
  for (const auto& h : model.hypotheses) hyps.push_back(h.text);
  j["hypotheses"] = hyps;
  j["prior"] = model.prior;
  Json qs = Json::array();
  Json lik = Json::object();
  for (std::size_t qi = 0; qi < model.question_bank.size(); ++qi) {
    qs.push_back(to_json(model.question_bank[qi]));
    Json rows = Json::array();
    for (const auto& r : model.likelihood[qi]) rows.push_back(to_json(r));
    lik[model.question_bank[qi].id] = rows;
  }
  j["questions"] = qs;
  j["likelihood"] = lik;
  if (model.true_target) j["true_target"] = model.hypotheses[*model.true_target].text;
  j["seed"] = model.seed;
  if (!model.catalog.empty()) {
    Json cat = Json::array();
    for (const auto& c : model.catalog) cat.push_back({{"title", c.title}, {"tags", c.tags}});
    j["catalog"] = cat;
    Json rubs = Json::array();
    for (const auto& r : model.rubrics) rubs.push_back({{"base", r.base}, {"tags", r.tag_deltas}});
    j["rubrics"] = rubs;
    j["recommendation_floor"] = model.recommendation_floor;
  }
  return j.dump(2);
}

TabularBackend::TabularBackend(std::shared_ptr<const TabularModel> model, std::uint64_t seed,
                               TabularOptions options)
    : model_(std::move(model)), options_(options), rng_(seed) {
  if (!model_) throw Error(ErrorCode::InvalidArgument, "null tabular model");
  model_->validate();
}

std::size_t TabularBackend::index_of(const Hypothesis& h) const {
  auto idx = model_->find_hypothesis(h.key);
  if (!idx) throw Error(ErrorCode::NotFound, "hypothesis not in the tabular model: " + h.text);
  return *idx;
}

std::vector<Hypothesis> TabularBackend::do_sample_hypothesis_batch(
    const History& history, int n, std::span<const Hypothesis> prior_batches) {
  const auto post = model_->posterior(history);
  std::unordered_set<std::string> seen;
  for (const auto& h : prior_batches) seen.insert(h.key);

  std::vector<double> fresh(post.size(), 0.0);
  for (std::size_t i = 0; i < post.size(); ++i) {
    if (!seen.count(model_->hypotheses[i].key)) fresh[i] = post[i];
  }

  std::vector<Hypothesis> out;
  std::lock_guard lock(rng_mutex_);
  // Novel support first, without replacement; then repeated draws from the
  // full posterior once it is exhausted.
  while (static_cast<int>(out.size()) < n) {
    const std::size_t i = rng_.categorical(fresh);
    if (i == fresh.size()) break;
    fresh[i] = 0.0;
    out.push_back(model_->hypotheses[i]);
  }
  while (static_cast<int>(out.size()) < n) {
    const std::size_t i = rng_.categorical(post);
    if (i == post.size()) break;
    out.push_back(model_->hypotheses[i]);
  }
  return out;
}

CategoricalDistribution TabularBackend::do_answer_distribution(const Hypothesis& hyp,
                                                               const Question& q) {
  return model_->row(q, index_of(hyp));
}

std::vector<std::size_t> TabularBackend::unasked_bank(const History& history,
                                                      QuestionKind kind) const {
  std::vector<std::size_t> all, unasked;
  for (std::size_t i = 0; i < model_->question_bank.size(); ++i) {
    const auto& q = model_->question_bank[i];
    if (q.kind != kind) continue;
    all.push_back(i);
    if (!history.contains_question(q.id)) unasked.push_back(i);
  }
  return unasked.empty() ? all : unasked;
}

std::vector<Question> TabularBackend::do_propose_unconstrained(const History& history, int m,
                                                               QuestionKind kind) {
  auto pool = unasked_bank(history, kind);
  std::lock_guard lock(rng_mutex_);
  for (std::size_t i = pool.size(); i > 1; --i) std::swap(pool[i - 1], pool[rng_.below(i)]);
  std::vector<Question> out;
  for (std::size_t i = 0; i < pool.size() && static_cast<int>(out.size()) < m; ++i) {
    out.push_back(model_->question_bank[pool[i]]);
  }
  return out;
}

std::vector<Question> TabularBackend::do_propose_conditional(const History& history,
                                                             std::span<const Hypothesis> hyps,
                                                             int m, QuestionKind kind) {
  std::vector<std::size_t> members;
  for (const auto& h : hyps) {
    if (auto idx = model_->find_hypothesis(h.key)) members.push_back(*idx);
  }
  auto pool = unasked_bank(history, kind);
  // Balance of a split: entropy of the option masses summed over the pool.
  std::vector<std::pair<double, std::size_t>> ranked;
  for (std::size_t qi : pool) {
    const auto& q = model_->question_bank[qi];
    std::vector<double> mass(q.options.size(), 0.0);
    for (std::size_t h : members) {
      const auto& r = model_->likelihood[qi][h];
      for (std::size_t o = 0; o < mass.size(); ++o) mass[o] += r[o];
    }
    ranked.emplace_back(members.empty() ? 0.0 : entropy_of_weights(mass), qi);
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<Question> out;
  for (std::size_t i = 0; i < ranked.size() && static_cast<int>(out.size()) < m; ++i) {
    out.push_back(model_->question_bank[ranked[i].second]);
  }
  return out;
}

Question TabularBackend::do_propose_naive(const History& history, QuestionKind kind) {
  auto pool = unasked_bank(history, kind);
  if (pool.empty()) throw Error(ErrorCode::QuestionGeneration, "tabular bank has no question of this kind");
  std::lock_guard lock(rng_mutex_);
  return model_->question_bank[pool[rng_.below(pool.size())]];
}

Answer TabularBackend::do_simulate_answer(const Hypothesis& target, const Question& q,
                                          std::uint64_t seed) {
  const auto r = model_->row(q, index_of(target));
  Rng local(seed);
  const std::size_t idx = local.categorical(r.probs());
  return Answer{q.id, idx};
}

std::vector<std::optional<double>> TabularBackend::do_judge(const Hypothesis& persona,
                                                            std::span<const std::string> items) {
  const std::size_t h = index_of(persona);
  std::vector<std::optional<double>> out;
  out.reserve(items.size());
  for (const auto& item : items) {
    auto ci = model_->find_catalog_item(item);
    if (!ci || model_->rubrics.empty()) {
      out.push_back(std::nullopt);
    } else {
      out.push_back(model_->rubrics[h].score(model_->catalog[*ci]));
    }
  }
  return out;
}

double TabularBackend::do_posterior_hypothesis_entropy(const History& history, const Question& q,
                                                       const Answer& a, int k) {
  History extended = history;
  extended.append(q, a);
  const auto post = model_->posterior(extended);
  if (std::all_of(post.begin(), post.end(), [](double w) { return w == 0.0; })) {
    throw Error(ErrorCode::Backend, "posterior is empty for this answer");
  }
  if (options_.posterior_entropy == PosteriorEntropyMode::Exact) return entropy_of_weights(post);

  std::vector<double> counts(post.size(), 0.0);
  std::lock_guard lock(rng_mutex_);
  for (int i = 0; i < k; ++i) counts[rng_.categorical(post)] += 1.0;
  return entropy_of_weights(counts);
}

CategoricalDistribution TabularBackend::do_predictive_answer_distribution(const History& history,
                                                                          const Question& q) {
  const auto post = model_->posterior(history);
  std::vector<double> p(q.options.size(), 0.0);
  for (std::size_t h = 0; h < post.size(); ++h) {
    if (post[h] <= 0.0) continue;
    const auto r = model_->row(q, h);
    for (std::size_t o = 0; o < p.size(); ++o) p[o] += post[h] * r[o];
  }
  return CategoricalDistribution::normalized(std::move(p));
}

std::size_t TabularBackend::do_most_likely_member(const History& history,
                                                  std::span<const Hypothesis> candidates) {
  const auto post = model_->posterior(history);
  std::size_t best = 0;
  double best_w = -1.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    auto idx = model_->find_hypothesis(candidates[i].key);
    const double w = idx ? post[*idx] : 0.0;
    if (w > best_w) {
      best_w = w;
      best = i;
    }
  }
  return best;
}

std::optional<Hypothesis> TabularBackend::do_greedy_generate(const History& history) {
  const auto post = model_->posterior(history);
  auto it = std::max_element(post.begin(), post.end());
  if (it == post.end() || *it <= 0.0) return std::nullopt;
  return model_->hypotheses[static_cast<std::size_t>(it - post.begin())];
}

double TabularBackend::expected_score(const CatalogItem& item, std::span<const double> weights) const {
  double s = 0.0, total = 0.0;
  for (std::size_t h = 0; h < weights.size(); ++h) {
    if (weights[h] <= 0.0) continue;
    s += weights[h] * model_->rubrics[h].score(item);
    total += weights[h];
  }
  return total > 0.0 ? s / total : 0.0;
}

std::vector<std::string> TabularBackend::do_generate_recommendations(
    const History& history, std::span<const Hypothesis> belief, int count,
    std::span<const std::string> exclude) {
  if (model_->catalog.empty()) return {};
  std::vector<double> weights(model_->hypotheses.size(), 0.0);
  for (const auto& b : belief) {
    if (auto idx = model_->find_hypothesis(b.key)) weights[*idx] = 1.0;
  }
  if (std::all_of(weights.begin(), weights.end(), [](double w) { return w == 0.0; })) {
    weights = model_->posterior(history);
  }
  std::unordered_set<std::string> skip;
  for (const auto& e : exclude) skip.insert(normalize_key(e));

  std::vector<std::pair<double, std::size_t>> ranked;
  for (std::size_t i = 0; i < model_->catalog.size(); ++i) {
    if (skip.count(normalize_key(model_->catalog[i].title))) continue;
    ranked.emplace_back(expected_score(model_->catalog[i], weights), i);
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < ranked.size() && static_cast<int>(out.size()) < count; ++i) {
    out.push_back(model_->catalog[ranked[i].second].title);
  }
  return out;
}

bool TabularBackend::do_recommendation_consistent(const std::string& item, const History& history) {
  auto ci = model_->find_catalog_item(item);
  if (!ci || model_->rubrics.empty()) return false;
  const auto post = model_->posterior(history);
  return expected_score(model_->catalog[*ci], post) >= model_->recommendation_floor;
}

}  // namespace infogain
