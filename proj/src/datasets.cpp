#include "infogain/datasets.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace infogain {

namespace {

constexpr std::string_view kAnimals =
#include "animals_data.inc"
    ;

struct NameFeature {
  std::string text;
  std::function<bool(const std::string&)> test;
};

std::size_t word_count(const std::string& key) {
  std::size_t words = 0;
  bool in_word = false;
  for (char c : key) {
    const bool sep = c == ' ' || c == '-';
    if (!sep && !in_word) ++words;
    in_word = !sep;
  }
  return words;
}

std::size_t letter_count(const std::string& key) {
  std::size_t n = 0;
  for (char c : key) n += (c >= 'a' && c <= 'z');
  return n;
}

char last_letter(const std::string& key) {
  for (auto it = key.rbegin(); it != key.rend(); ++it) {
    if (*it >= 'a' && *it <= 'z') return *it;
  }
  return '\0';
}

std::vector<NameFeature> name_features() {
  std::vector<NameFeature> f;
  for (char hi = 'b'; hi <= 'y'; ++hi) {
    const char up = static_cast<char>(hi - 'a' + 'A');
    f.push_back({std::string("Does its name start with a letter from A to ") + up + "?",
                 [hi](const std::string& k) { return !k.empty() && k.front() >= 'a' && k.front() <= hi; }});
  }
  for (char hi = 'b'; hi <= 'y'; ++hi) {
    const char up = static_cast<char>(hi - 'a' + 'A');
    f.push_back({std::string("Does its name end with a letter from A to ") + up + "?",
                 [hi](const std::string& k) {
                   const char c = last_letter(k);
                   return c >= 'a' && c <= hi;
                 }});
  }
  for (char c = 'a'; c <= 'z'; ++c) {
    const char up = static_cast<char>(c - 'a' + 'A');
    f.push_back({std::string("Does its name contain the letter ") + up + "?",
                 [c](const std::string& k) { return k.find(c) != std::string::npos; }});
  }
  for (std::size_t w = 1; w <= 3; ++w) {
    f.push_back({"Does its name have more than " + std::to_string(w) + (w == 1 ? " word?" : " words?"),
                 [w](const std::string& k) { return word_count(k) > w; }});
  }
  for (std::size_t n = 4; n <= 20; ++n) {
    f.push_back({"Does its name have more than " + std::to_string(n) + " letters?",
                 [n](const std::string& k) { return letter_count(k) > n; }});
  }
  return f;
}

// ---------------------------------------------------------------------------
// Persona fixture

struct PersonaSpec {
  const char* text;
  double base;
  std::vector<std::pair<std::string, double>> deltas;
};

const std::vector<PersonaSpec>& persona_specs() {
  static const std::vector<PersonaSpec> specs = {
      {"A software engineer in their thirties who loves hard science fiction and films built around big "
       "ideas. Enjoys the occasional documentary and cannot stand horror.",
       3.0, {{"scifi", 2.0}, {"documentary", 0.5}, {"horror", -2.0}}},
      {"A retired teacher who adores classic musicals and gentle family films. Dislikes graphic violence, "
       "so war films, crime and horror are off the table.",
       3.0, {{"musical", 2.0}, {"family", 1.5}, {"war", -1.5}, {"crime", -1.0}, {"horror", -2.0}}},
      {"A university student who watches horror every weekend and enjoys a twisty thriller. Finds romance "
       "boring.",
       3.0, {{"horror", 2.0}, {"thriller", 1.5}, {"romance", -1.5}}},
      {"A parent of two young children who mostly watches animation and family comedies, and avoids "
       "anything frightening.",
       3.0, {{"animation", 2.0}, {"family", 2.0}, {"comedy", 1.0}, {"horror", -2.0}, {"thriller", -1.0}}},
      {"A history enthusiast who seeks out war films and documentaries. Thinks musicals are silly.",
       3.0, {{"war", 2.0}, {"documentary", 1.5}, {"musical", -2.0}}},
      {"A hopeless romantic who loves period romances and heartfelt dramas, with no patience for action "
       "blockbusters.",
       3.0, {{"romance", 2.0}, {"drama", 1.5}, {"action", -1.5}, {"scifi", -0.5}}},
      {"A crime-fiction reader who loves detective mysteries and gangster films. Dislikes fantasy worlds.",
       3.0, {{"mystery", 2.0}, {"crime", 2.0}, {"fantasy", -1.5}}},
      {"An adrenaline seeker who wants explosive action and science fiction spectacle. Slow dramas and "
       "documentaries feel dull.",
       3.0, {{"action", 2.0}, {"scifi", 1.0}, {"drama", -1.5}, {"documentary", -1.0}}},
      {"A fan of westerns and old Hollywood who also enjoys war epics, but has never liked animation.",
       3.0, {{"western", 2.0}, {"war", 1.0}, {"animation", -1.5}}},
      {"A tabletop gamer who loves epic fantasy and animated adventures, and avoids documentaries.",
       3.0, {{"fantasy", 2.0}, {"animation", 1.5}, {"documentary", -1.5}}},
      {"Someone who watches films to laugh: comedies first, light romantic comedies second. Bleak war films "
       "are the worst.",
       3.0, {{"comedy", 2.0}, {"romance", 1.0}, {"war", -2.0}}},
      {"A nature photographer who prefers documentaries and quiet dramas, and dislikes horror and crime.",
       3.0, {{"documentary", 2.0}, {"drama", 1.0}, {"horror", -1.5}, {"crime", -1.0}}},
      {"A film-school graduate who loves character-driven drama and a good mystery, and finds family films "
       "tedious.",
       3.0, {{"drama", 2.0}, {"mystery", 1.0}, {"family", -1.5}}},
      {"A suspense devotee who enjoys thrillers, crime and mystery, with little interest in musicals.",
       3.0, {{"thriller", 2.0}, {"crime", 1.0}, {"mystery", 1.0}, {"musical", -1.5}}},
      {"A musical theatre performer who loves musicals and romance, and avoids westerns and war films.",
       3.0, {{"musical", 2.0}, {"romance", 1.5}, {"western", -1.5}, {"war", -1.5}}},
      {"A teenager who loves fast action and animation and dislikes old westerns.",
       3.0, {{"action", 1.5}, {"animation", 1.5}, {"western", -2.0}}},
      {"A science teacher who enjoys science fiction and documentaries equally, and dislikes romance.",
       3.0, {{"scifi", 1.5}, {"documentary", 1.5}, {"romance", -1.5}}},
      {"A cautious viewer who enjoys fantasy and family adventures and stays away from horror and "
       "thrillers.",
       3.0, {{"fantasy", 1.5}, {"family", 1.5}, {"horror", -2.0}, {"thriller", -1.0}}},
      {"A fan of dark crime dramas and gritty westerns who avoids comedies.",
       3.0, {{"crime", 2.0}, {"western", 1.5}, {"comedy", -1.5}}},
      {"An easygoing viewer who likes comedies and action films about equally and dislikes documentaries.",
       3.0, {{"comedy", 1.5}, {"action", 1.5}, {"documentary", -1.5}}},
  };
  return specs;
}

struct PersonaQuestion {
  const char* text;
  std::vector<std::pair<std::string, std::string>> options;  // (tag, option text)
};

const std::vector<PersonaQuestion>& persona_questions() {
  static const std::vector<PersonaQuestion> qs = {
      {"Which kind of film would you most like to watch tonight?",
       {{"scifi", "Science fiction"}, {"horror", "Horror"}, {"romance", "Romance"}, {"comedy", "Comedy"}}},
      {"Which of these would you pick on a long flight?",
       {{"drama", "A drama"}, {"documentary", "A documentary"}, {"animation", "An animated film"},
        {"action", "An action film"}}},
      {"Which of these genres do you enjoy most?",
       {{"thriller", "Thriller"}, {"fantasy", "Fantasy"}, {"musical", "Musical"}, {"western", "Western"}}},
      {"Which kind of story grabs you most?",
       {{"war", "A war story"}, {"crime", "A crime story"}, {"family", "A family adventure"},
        {"mystery", "A mystery"}}},
      {"Which of these would you rather see on a big screen?",
       {{"scifi", "A space epic"}, {"action", "A car-chase action film"}, {"fantasy", "A fantasy quest"},
        {"war", "A battlefield epic"}}},
      {"Which of these would you choose for a quiet evening?",
       {{"romance", "A love story"}, {"drama", "A character drama"}, {"documentary", "A nature documentary"},
        {"musical", "A musical"}}},
      {"Which of these keeps you most engaged?",
       {{"horror", "Being scared"}, {"thriller", "Suspense"}, {"crime", "A heist or gangster plot"},
        {"mystery", "Solving a whodunit"}}},
      {"What would you put on with friends?",
       {{"comedy", "A comedy"}, {"animation", "An animated film"}, {"family", "A family film"},
        {"western", "A western"}}},
      {"Which of these do you look for first in a streaming catalogue?",
       {{"scifi", "Science fiction"}, {"drama", "Drama"}, {"crime", "Crime"}, {"comedy", "Comedy"}}},
      {"Which of these would you happily rewatch?",
       {{"fantasy", "A fantasy classic"}, {"documentary", "A great documentary"}, {"horror", "A horror classic"},
        {"family", "A family favourite"}}},
  };
  return qs;
}

const std::vector<CatalogItem>& film_catalog() {
  static const std::vector<CatalogItem> films = {
      {"Blade Runner", {"scifi", "thriller"}},
      {"Arrival", {"scifi", "drama"}},
      {"The Matrix", {"scifi", "action"}},
      {"Interstellar", {"scifi", "drama"}},
      {"Alien", {"scifi", "horror"}},
      {"2001: A Space Odyssey", {"scifi"}},
      {"Ex Machina", {"scifi", "thriller"}},
      {"The Shining", {"horror"}},
      {"Hereditary", {"horror"}},
      {"Get Out", {"horror", "thriller"}},
      {"A Quiet Place", {"horror", "scifi"}},
      {"Before Sunrise", {"romance", "drama"}},
      {"Casablanca", {"romance", "war"}},
      {"Amélie", {"romance", "comedy"}},
      {"Pride and Prejudice", {"romance", "drama"}},
      {"La La Land", {"romance", "musical"}},
      {"Groundhog Day", {"comedy", "fantasy"}},
      {"Some Like It Hot", {"comedy", "crime"}},
      {"Airplane!", {"comedy"}},
      {"The Grand Budapest Hotel", {"comedy", "crime"}},
      {"Hot Fuzz", {"comedy", "action"}},
      {"The Shawshank Redemption", {"drama", "crime"}},
      {"Moonlight", {"drama"}},
      {"12 Angry Men", {"drama"}},
      {"Free Solo", {"documentary"}},
      {"March of the Penguins", {"documentary", "family"}},
      {"Man on Wire", {"documentary"}},
      {"Hoop Dreams", {"documentary", "drama"}},
      {"Spirited Away", {"animation", "fantasy"}},
      {"Toy Story", {"animation", "family"}},
      {"WALL-E", {"animation", "scifi"}},
      {"Spider-Man: Into the Spider-Verse", {"animation", "action"}},
      {"Mad Max: Fury Road", {"action", "scifi"}},
      {"Die Hard", {"action", "thriller"}},
      {"Raiders of the Lost Ark", {"action"}},
      {"Rear Window", {"thriller", "mystery"}},
      {"Se7en", {"thriller", "crime"}},
      {"Parasite", {"thriller", "drama"}},
      {"The Fellowship of the Ring", {"fantasy", "action"}},
      {"Pan's Labyrinth", {"fantasy", "war"}},
      {"The Princess Bride", {"fantasy", "romance"}},
      {"Singin' in the Rain", {"musical", "comedy"}},
      {"The Sound of Music", {"musical", "family"}},
      {"West Side Story", {"musical", "romance"}},
      {"The Good, the Bad and the Ugly", {"western"}},
      {"Unforgiven", {"western", "drama"}},
      {"True Grit", {"western"}},
      {"Saving Private Ryan", {"war", "action"}},
      {"Apocalypse Now", {"war", "drama"}},
      {"Dunkirk", {"war"}},
      {"The Godfather", {"crime", "drama"}},
      {"Pulp Fiction", {"crime", "comedy"}},
      {"Heat", {"crime", "action"}},
      {"Paddington 2", {"family", "comedy"}},
      {"E.T. the Extra-Terrestrial", {"family", "scifi"}},
      {"The Wizard of Oz", {"family", "musical"}},
      {"Knives Out", {"mystery", "comedy"}},
      {"Memento", {"mystery", "thriller"}},
      {"Chinatown", {"mystery", "crime"}},
      {"Murder on the Orient Express", {"mystery"}},
  };
  return films;
}

double delta_for(const PersonaSpec& p, const std::string& tag) {
  for (const auto& [t, d] : p.deltas) {
    if (t == tag) return d;
  }
  return 0.0;
}

}  // namespace

std::vector<TargetEntry> parse_dataset(std::string_view text) {
  std::vector<TargetEntry> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    out.push_back(parse_target_entry(line));
  }
  return out;
}

std::vector<TargetEntry> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open dataset " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_dataset(ss.str());
}

std::string_view animals_text() { return kAnimals; }

std::vector<TargetEntry> animals_dataset() { return parse_dataset(kAnimals); }

TabularModel make_name_feature_model(const std::vector<TargetEntry>& entries) {
  if (entries.empty()) throw Error(ErrorCode::InvalidArgument, "empty dataset");
  TabularModel m;
  for (const auto& e : entries) m.hypotheses.emplace_back(e.name);
  m.prior.assign(m.hypotheses.size(), 1.0 / static_cast<double>(m.hypotheses.size()));
  for (auto& f : name_features()) {
    std::vector<CategoricalDistribution> rows;
    std::size_t yes = 0;
    for (const auto& h : m.hypotheses) {
      const bool v = f.test(h.key);
      yes += v;
      rows.push_back(CategoricalDistribution::point_mass(2, v ? 0 : 1));
    }
    // A feature shared by every name or by none cannot tell them apart.
    if (yes == 0 || yes == m.hypotheses.size()) continue;
    m.question_bank.push_back(Question::binary(question_id_for(f.text), f.text));
    m.likelihood.push_back(std::move(rows));
  }
  m.validate();
  return m;
}

TabularModel make_persona_model() {
  TabularModel m;
  const auto& specs = persona_specs();
  for (const auto& p : specs) {
    m.hypotheses.emplace_back(p.text);
    Rubric r;
    r.base = p.base;
    for (const auto& [tag, d] : p.deltas) r.tag_deltas[tag] = d;
    m.rubrics.push_back(std::move(r));
  }
  m.prior.assign(specs.size(), 1.0 / static_cast<double>(specs.size()));
  for (const auto& pq : persona_questions()) {
    std::vector<std::string> choices;
    for (const auto& [tag, text] : pq.options) choices.push_back(text);
    m.question_bank.push_back(Question::multiple_choice(question_id_for(pq.text), pq.text, choices));
    std::vector<CategoricalDistribution> rows;
    for (const auto& p : specs) {
      std::vector<double> w;
      for (const auto& [tag, text] : pq.options) w.push_back(std::exp(1.2 * delta_for(p, tag)));
      w.push_back(0.6);  // none of the above
      rows.push_back(CategoricalDistribution::normalized(std::move(w)));
    }
    m.likelihood.push_back(std::move(rows));
  }
  m.catalog = film_catalog();
  m.recommendation_floor = 2.5;
  m.validate();
  return m;
}

std::vector<TargetEntry> persona_dataset() {
  std::vector<TargetEntry> out;
  for (const auto& p : persona_specs()) out.push_back(TargetEntry{p.text, {}});
  return out;
}

}  // namespace infogain
