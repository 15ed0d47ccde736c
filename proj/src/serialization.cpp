#include "infogain/serialization.hpp"

namespace infogain {

Json to_json(const Question& q) {
  Json opts = Json::array();
  for (const auto& o : q.options) opts.push_back({{"label", o.label}, {"text", o.text}});
  Json j = {{"id", q.id}, {"text", q.text}, {"kind", to_string(q.kind)}, {"options", opts}};
  if (q.guess_of) j["guess_of"] = *q.guess_of;
  return j;
}

Question question_from_json(const Json& j) {
  Question q;
  q.id = j.at("id").get<std::string>();
  q.text = j.at("text").get<std::string>();
  q.kind = question_kind_from_string(j.value("kind", std::string("binary")));
  if (j.contains("options")) {
    for (const auto& o : j.at("options")) {
      q.options.push_back({o.at("label").get<std::string>(), o.value("text", o.at("label").get<std::string>())});
    }
  } else if (q.kind == QuestionKind::Binary) {
    q.options = {{"Yes", "Yes"}, {"No", "No"}};
  } else {
    auto choices = j.at("choices").get<std::vector<std::string>>();
    q = Question::multiple_choice(q.id, q.text, std::move(choices));
  }
  if (j.contains("guess_of")) q.guess_of = j.at("guess_of").get<std::string>();
  q.validate();
  return q;
}

Json to_json(const Answer& a) {
  return {{"question_id", a.question_id}, {"option_index", a.option_index}};
}

Answer answer_from_json(const Json& j) {
  return Answer{j.at("question_id").get<std::string>(), j.at("option_index").get<std::size_t>()};
}

Json to_json(const History& h) {
  Json arr = Json::array();
  for (const auto& [q, a] : h.pairs()) {
    arr.push_back({{"question", to_json(q)},
                   {"answer", to_json(a)},
                   {"answer_label", q.options.at(a.option_index).label}});
  }
  return arr;
}

History history_from_json(const Json& j) {
  History h;
  for (const auto& p : j) h.append(question_from_json(p.at("question")), answer_from_json(p.at("answer")));
  return h;
}

Json to_json(const BeliefState& b) {
  Json members = Json::array();
  for (const auto& m : b.members()) members.push_back(m.text);
  return {{"turn", b.turn()}, {"count", b.size()}, {"hypotheses", members}};
}

BeliefState belief_from_json(const Json& j) {
  BeliefState b(j.value("turn", 0));
  for (const auto& m : j.at("hypotheses")) b.insert(Hypothesis(m.get<std::string>()));
  return b;
}

Json to_json(const CategoricalDistribution& d) {
  return Json(std::vector<double>(d.probs().begin(), d.probs().end()));
}

}  // namespace infogain
