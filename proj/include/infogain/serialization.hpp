#pragma once

// JSON mappings for the shared domain types. Kept out of core.hpp so only
// translation units that serialize pay for the json header.

#include "json.hpp"

#include "infogain/core.hpp"

namespace infogain {

using Json = nlohmann::json;

Json to_json(const Question& q);
Question question_from_json(const Json& j);

Json to_json(const Answer& a);
Answer answer_from_json(const Json& j);

Json to_json(const History& h);
History history_from_json(const Json& j);

Json to_json(const BeliefState& b);
BeliefState belief_from_json(const Json& j);

Json to_json(const CategoricalDistribution& d);

}  // namespace infogain
