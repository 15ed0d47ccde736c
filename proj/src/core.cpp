#include "infogain/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_set>

namespace infogain {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::Transport: return "transport";
    case ErrorCode::Parse: return "parse";
    case ErrorCode::QuestionGeneration: return "question_generation";
    case ErrorCode::NotFound: return "not_found";
    case ErrorCode::Conflict: return "conflict";
    case ErrorCode::Backend: return "backend";
  }
  return "unknown";
}

namespace {

// Base letters for U+00C0..U+017F. Empty entries are not letters with a
// plain-ASCII base and are passed through unchanged.
constexpr const char* kLatinFold[] = {
    // U+00C0
    "a", "a", "a", "a", "a", "a", "ae", "c", "e", "e", "e", "e", "i", "i", "i", "i",
    // U+00D0
    "d", "n", "o", "o", "o", "o", "o", nullptr, "o", "u", "u", "u", "u", "y", "th", "ss",
    // U+00E0
    "a", "a", "a", "a", "a", "a", "ae", "c", "e", "e", "e", "e", "i", "i", "i", "i",
    // U+00F0
    "d", "n", "o", "o", "o", "o", "o", nullptr, "o", "u", "u", "u", "u", "y", "th", "y",
    // U+0100
    "a", "a", "a", "a", "a", "a", "c", "c", "c", "c", "c", "c", "c", "c", "d", "d",
    // U+0110
    "d", "d", "e", "e", "e", "e", "e", "e", "e", "e", "e", "e", "g", "g", "g", "g",
    // U+0120
    "g", "g", "g", "g", "h", "h", "h", "h", "i", "i", "i", "i", "i", "i", "i", "i",
    // U+0130
    "i", "i", "ij", "ij", "j", "j", "k", "k", "k", "l", "l", "l", "l", "l", "l", "l",
    // U+0140
    "l", "l", "l", "n", "n", "n", "n", "n", "n", "n", "n", "n", "o", "o", "o", "o",
    // U+0150
    "o", "o", "oe", "oe", "r", "r", "r", "r", "r", "r", "s", "s", "s", "s", "s", "s",
    // U+0160
    "s", "s", "t", "t", "t", "t", "t", "t", "u", "u", "u", "u", "u", "u", "u", "u",
    // U+0170
    "u", "u", "u", "u", "w", "w", "y", "y", "y", "z", "z", "z", "z", "z", "z", "s",
};

// Decodes one UTF-8 sequence starting at s[i]. Malformed bytes decode as
// themselves with length 1.
char32_t decode_utf8(std::string_view s, std::size_t i, std::size_t& len) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  auto cont = [&](std::size_t k) -> int {
    if (i + k >= s.size()) return -1;
    const auto b = static_cast<unsigned char>(s[i + k]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) {
    len = 1;
    return b0;
  }
  if ((b0 & 0xE0) == 0xC0) {
    const int c1 = cont(1);
    if (c1 >= 0) {
      len = 2;
      return (char32_t(b0 & 0x1F) << 6) | char32_t(c1);
    }
  } else if ((b0 & 0xF0) == 0xE0) {
    const int c1 = cont(1), c2 = cont(2);
    if (c1 >= 0 && c2 >= 0) {
      len = 3;
      return (char32_t(b0 & 0x0F) << 12) | (char32_t(c1) << 6) | char32_t(c2);
    }
  } else if ((b0 & 0xF8) == 0xF0) {
    const int c1 = cont(1), c2 = cont(2), c3 = cont(3);
    if (c1 >= 0 && c2 >= 0 && c3 >= 0) {
      len = 4;
      return (char32_t(b0 & 0x07) << 18) | (char32_t(c1) << 12) |
             (char32_t(c2) << 6) | char32_t(c3);
    }
  }
  len = 1;
  return b0;
}

bool is_space(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' ||
         c == U'\v' || c == 0x00A0;
}

}  // namespace

std::string normalize_key(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t len = 1;
    const char32_t c = decode_utf8(text, i, len);
    if (is_space(c)) {
      pending_space = !out.empty();
      i += len;
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    if (c < 0x80) {
      char ch = static_cast<char>(c);
      if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
      out.push_back(ch);
    } else if (c >= 0x00C0 && c <= 0x017F && kLatinFold[c - 0x00C0] != nullptr) {
      out += kLatinFold[c - 0x00C0];
    } else {
      out.append(text.substr(i, len));
    }
    i += len;
  }
  return out;
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Hypothesis::Hypothesis(std::string t) : text(std::move(t)), key(normalize_key(text)) {
  if (key.empty()) {
    throw Error(ErrorCode::InvalidArgument, "hypothesis text must be non-empty");
  }
}

std::string_view to_string(QuestionKind kind) {
  return kind == QuestionKind::Binary ? "binary" : "multiple_choice";
}

QuestionKind question_kind_from_string(std::string_view s) {
  if (s == "binary") return QuestionKind::Binary;
  if (s == "multiple_choice" || s == "multiple-choice") return QuestionKind::MultipleChoice;
  throw Error(ErrorCode::InvalidArgument, "unknown question kind: " + std::string(s));
}

std::string question_id_for(std::string_view text) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "q%016llx",
                static_cast<unsigned long long>(fnv1a64(normalize_key(text))));
  return buf;
}

Question Question::binary(std::string id, std::string text) {
  Question q;
  q.id = std::move(id);
  q.text = std::move(text);
  q.kind = QuestionKind::Binary;
  q.options = {{"Yes", "Yes"}, {"No", "No"}};
  return q;
}

Question Question::multiple_choice(std::string id, std::string text,
                                   std::vector<std::string> choices) {
  if (choices.size() != 4) {
    throw Error(ErrorCode::InvalidArgument,
                "multiple-choice questions take exactly four generated options");
  }
  Question q;
  q.id = std::move(id);
  q.text = std::move(text);
  q.kind = QuestionKind::MultipleChoice;
  const char* labels[] = {"A", "B", "C", "D"};
  for (std::size_t i = 0; i < 4; ++i) q.options.push_back({labels[i], std::move(choices[i])});
  q.options.push_back({"E", std::string(kNoneOfTheAbove)});
  q.validate();
  return q;
}

Question Question::guess(const Hypothesis& h) {
  Question q = binary("guess:" + h.key, "Is it " + h.text + "?");
  q.guess_of = h.text;
  return q;
}

void Question::validate() const {
  if (text.empty()) throw Error(ErrorCode::InvalidArgument, "question text is empty");
  if (options.size() < 2) throw Error(ErrorCode::InvalidArgument, "question needs at least two options");
  std::unordered_set<std::string> seen;
  for (const auto& o : options) {
    if (o.label.empty()) throw Error(ErrorCode::InvalidArgument, "empty option label");
    if (!seen.insert(normalize_key(o.label)).second) {
      throw Error(ErrorCode::InvalidArgument, "duplicate option label: " + o.label);
    }
  }
  if (kind == QuestionKind::Binary) {
    if (options.size() != 2 || options[0].label != "Yes" || options[1].label != "No") {
      throw Error(ErrorCode::InvalidArgument, "binary questions must have options [Yes, No]");
    }
  } else {
    static constexpr std::string_view kLabels[] = {"A", "B", "C", "D", "E"};
    if (options.size() != 5) {
      throw Error(ErrorCode::InvalidArgument, "multiple-choice questions must have options A-E");
    }
    for (std::size_t i = 0; i < 5; ++i) {
      if (options[i].label != kLabels[i]) {
        throw Error(ErrorCode::InvalidArgument, "multiple-choice labels must be A-E in order");
      }
    }
    if (normalize_key(options[4].text) != kNoneOfTheAbove) {
      throw Error(ErrorCode::InvalidArgument, "option E must be \"none of the above\"");
    }
  }
}

std::optional<std::size_t> Question::option_index(std::string_view label) const {
  const std::string want = normalize_key(label);
  for (std::size_t i = 0; i < options.size(); ++i) {
    if (normalize_key(options[i].label) == want) return i;
  }
  return std::nullopt;
}

void History::append(Question q, Answer a) {
  if (a.question_id != q.id) {
    throw Error(ErrorCode::InvalidArgument, "answer does not reference its question");
  }
  if (a.option_index >= q.options.size()) {
    throw Error(ErrorCode::InvalidArgument, "answer option index out of range");
  }
  pairs_.emplace_back(std::move(q), std::move(a));
}

bool History::contains_question(std::string_view question_id) const {
  return std::any_of(pairs_.begin(), pairs_.end(),
                     [&](const Pair& p) { return p.first.id == question_id; });
}

History History::prefix(std::size_t n) const {
  History h;
  h.pairs_.assign(pairs_.begin(), pairs_.begin() + static_cast<std::ptrdiff_t>(std::min(n, pairs_.size())));
  return h;
}

CategoricalDistribution::CategoricalDistribution(std::vector<double> probs)
    : probs_(std::move(probs)) {
  if (probs_.empty()) throw Error(ErrorCode::InvalidArgument, "empty distribution");
  double sum = 0.0;
  for (double p : probs_) {
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
      throw Error(ErrorCode::InvalidArgument, "probability outside [0, 1]");
    }
    sum += p;
  }
  if (std::fabs(sum - 1.0) > kSumTolerance) {
    throw Error(ErrorCode::InvalidArgument, "probabilities do not sum to 1");
  }
}

CategoricalDistribution CategoricalDistribution::normalized(std::vector<double> weights) {
  double sum = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) {
      throw Error(ErrorCode::InvalidArgument, "weights must be finite and non-negative");
    }
    sum += w;
  }
  if (!(sum > 0.0)) throw Error(ErrorCode::InvalidArgument, "weights sum to zero");
  for (double& w : weights) w /= sum;
  return CategoricalDistribution(std::move(weights));
}

CategoricalDistribution CategoricalDistribution::uniform(std::size_t k) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "empty distribution");
  return CategoricalDistribution(std::vector<double>(k, 1.0 / static_cast<double>(k)));
}

CategoricalDistribution CategoricalDistribution::point_mass(std::size_t k, std::size_t index) {
  if (index >= k) throw Error(ErrorCode::InvalidArgument, "point mass index out of range");
  std::vector<double> p(k, 0.0);
  p[index] = 1.0;
  return CategoricalDistribution(std::move(p));
}

double entropy(const CategoricalDistribution& dist) {
  double h = 0.0;
  for (double p : dist.probs()) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h < 0.0 ? 0.0 : h;
}

double entropy_of_weights(std::span<const double> weights) {
  double sum = 0.0;
  for (double w : weights) sum += w;
  if (!(sum > 0.0)) throw Error(ErrorCode::InvalidArgument, "weights sum to zero");
  double h = 0.0;
  for (double w : weights) {
    if (w > 0.0) {
      const double p = w / sum;
      h -= p * std::log(p);
    }
  }
  return h < 0.0 ? 0.0 : h;
}

CategoricalDistribution mix(std::span<const CategoricalDistribution> dists) {
  if (dists.empty()) throw Error(ErrorCode::InvalidArgument, "mix of an empty list");
  const std::size_t k = dists.front().size();
  std::vector<double> acc(k, 0.0);
  for (const auto& d : dists) {
    if (d.size() != k) throw Error(ErrorCode::InvalidArgument, "mix of distributions with different sizes");
    for (std::size_t i = 0; i < k; ++i) acc[i] += d[i];
  }
  const double n = static_cast<double>(dists.size());
  for (double& a : acc) a /= n;
  return CategoricalDistribution::normalized(std::move(acc));
}

bool BeliefState::insert(Hypothesis h) {
  if (contains(h.key)) return false;
  members_.push_back(std::move(h));
  return true;
}

bool BeliefState::contains(std::string_view key) const {
  return std::any_of(members_.begin(), members_.end(),
                     [&](const Hypothesis& m) { return m.key == key; });
}

}  // namespace infogain
