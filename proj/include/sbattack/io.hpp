#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "sbattack/core.hpp"
#include "sbattack/synth.hpp"

namespace sbattack {

// Template CSV layout:
//   id,identity,attribute,quality,v0,v1,...,v{D-1}
// quality may be empty; fields are unquoted decimal text; LF line endings.
// D comes from the header and every row must match it.

/// Throws ValidationError (with the 1-based line number) on malformed input.
std::vector<LabeledTemplate> read_templates_csv(std::istream& in, std::string_view source = "<stream>");
/// Throws DataError when the file cannot be opened.
std::vector<LabeledTemplate> read_templates_csv(const std::filesystem::path& path);

void write_templates_csv(std::ostream& out, std::span<const LabeledTemplate> templates);
void write_templates_csv(const std::filesystem::path& path, std::span<const LabeledTemplate> templates);

struct GalleryManifest {
  std::string name;
  Eigen::Index dimension = 0;
  std::vector<std::string> attributes;
  std::string source;
};

nlohmann::json to_json(const GalleryManifest& m);
GalleryManifest manifest_from_json(const nlohmann::json& j);
GalleryManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const GalleryManifest& m);

/// Builds a gallery from a template CSV. Attribute order comes from the
/// manifest when given, otherwise from the sorted labels in the file.
Gallery load_gallery(const std::filesystem::path& csv,
                     const std::optional<std::filesystem::path>& manifest = std::nullopt);

/// `<stem>.manifest.json` next to a CSV.
std::filesystem::path manifest_path_for(const std::filesystem::path& csv);

nlohmann::json to_json(const SynthConfig& cfg);
/// Missing keys keep their defaults; unknown keys and wrong types throw
/// ValidationError.
SynthConfig synth_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const EnhancerSpec& spec);
EnhancerSpec enhancer_spec_from_json(const nlohmann::json& j);

/// Shortest text that reads back to the same double.
std::string format_double(double v);

nlohmann::json read_json_file(const std::filesystem::path& path);
/// Pretty-printed with a trailing newline.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace sbattack
