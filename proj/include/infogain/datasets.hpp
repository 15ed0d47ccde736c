#pragma once

// Shipped fixtures and dataset loading.

#include <filesystem>
#include <string_view>
#include <vector>

#include "infogain/controller.hpp"
#include "infogain/tabular.hpp"

namespace infogain {

/// One entry per non-blank line in "Name | Alt1 | Alt2" form; lines starting
/// with '#' are comments.
std::vector<TargetEntry> parse_dataset(std::string_view text);
std::vector<TargetEntry> load_dataset(const std::filesystem::path& path);

/// The bundled 100-animal list.
std::string_view animals_text();
std::vector<TargetEntry> animals_dataset();

/// Deterministic yes/no questions about the spelling of each canonical name
/// (initial letter ranges, contained letters, word count, length). Lets the
/// tabular backend play entity games over any dataset without a model.
TabularModel make_name_feature_model(const std::vector<TargetEntry>& entries);

/// 20 film-taste personas with rubrics, a film catalog and a multiple-choice
/// question bank whose answer rows follow each persona's rubric.
TabularModel make_persona_model();
std::vector<TargetEntry> persona_dataset();

}  // namespace infogain
