#include "sbattack/io.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "sbattack/errors.hpp"

namespace sbattack {

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::optional<double> parse_double(std::string_view text) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) return std::nullopt;
  return v;
}

[[noreturn]] void csv_error(std::string_view source, std::size_t line, const std::string& what) {
  throw ValidationError(std::string(source) + ":" + std::to_string(line) + ": " + what);
}

const char* kLeadColumns[] = {"id", "identity", "attribute", "quality"};

template <typename T>
T get_field(const nlohmann::json& j, const char* key, const T& fallback) {
  if (!j.contains(key)) return fallback;
  if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
    const auto& v = j.at(key);
    if (!v.is_number_integer() || (std::is_unsigned_v<T> && !v.is_number_unsigned())) {
      throw ValidationError(std::string("field '") + key + "' must be a" +
                            (std::is_unsigned_v<T> ? " non-negative" : "n") + " integer");
    }
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(std::string("field '") + key + "' has the wrong type");
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::vector<LabeledTemplate> read_templates_csv(std::istream& in, std::string_view source) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };

  if (!next_line()) csv_error(source, 1, "missing header row");
  const auto header = split(line, ',');
  for (std::size_t c = 0; c < 4; ++c) {
    if (c >= header.size() || header[c] != kLeadColumns[c]) {
      csv_error(source, 1, std::string("header column ") + std::to_string(c + 1) + " must be '" +
                               kLeadColumns[c] + "'");
    }
  }
  const std::size_t dim = header.size() - 4;
  if (dim == 0) csv_error(source, 1, "header has no embedding columns (v0, v1, ...)");
  for (std::size_t d = 0; d < dim; ++d) {
    if (header[4 + d] != "v" + std::to_string(d)) {
      csv_error(source, 1, "embedding column " + std::to_string(d) + " must be named 'v" +
                               std::to_string(d) + "'");
    }
  }

  std::vector<LabeledTemplate> out;
  std::set<std::string> ids;
  while (next_line()) {
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != header.size()) {
      csv_error(source, line_no, "expected " + std::to_string(header.size()) + " fields, got " +
                                     std::to_string(fields.size()));
    }
    LabeledTemplate t;
    t.id = std::string(fields[0]);
    t.identity = std::string(fields[1]);
    t.attribute = std::string(fields[2]);
    if (t.id.empty()) csv_error(source, line_no, "empty id");
    if (t.identity.empty()) csv_error(source, line_no, "empty identity");
    if (t.attribute.empty()) csv_error(source, line_no, "empty attribute");
    if (!ids.insert(t.id).second) csv_error(source, line_no, "duplicate id '" + t.id + "'");
    if (!fields[3].empty()) {
      const auto q = parse_double(fields[3]);
      if (!q || !std::isfinite(*q)) csv_error(source, line_no, "invalid quality value");
      t.quality = *q;
    }
    t.embedding.resize(static_cast<Eigen::Index>(dim));
    for (std::size_t d = 0; d < dim; ++d) {
      const auto v = parse_double(fields[4 + d]);
      if (!v || !std::isfinite(*v)) {
        csv_error(source, line_no, "invalid value in column v" + std::to_string(d));
      }
      t.embedding(static_cast<Eigen::Index>(d)) = *v;
    }
    if (!(t.embedding.norm() > 0.0)) csv_error(source, line_no, "zero-norm embedding");
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<LabeledTemplate> read_templates_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return read_templates_csv(in, path.string());
}

void write_templates_csv(std::ostream& out, std::span<const LabeledTemplate> templates) {
  const Eigen::Index dim = templates.empty() ? 0 : templates.front().embedding.size();
  if (templates.empty()) {
    throw ValidationError("cannot write an empty template CSV (dimension unknown)");
  }
  out << "id,identity,attribute,quality";
  for (Eigen::Index d = 0; d < dim; ++d) out << ",v" << d;
  out << '\n';
  for (const auto& t : templates) {
    if (t.embedding.size() != dim) {
      throw ValidationError("template '" + t.id + "' has dimension " +
                            std::to_string(t.embedding.size()) + ", expected " + std::to_string(dim));
    }
    out << t.id << ',' << t.identity << ',' << t.attribute << ',';
    if (t.quality) out << format_double(*t.quality);
    for (Eigen::Index d = 0; d < dim; ++d) out << ',' << format_double(t.embedding(d));
    out << '\n';
  }
}

void write_templates_csv(const std::filesystem::path& path, std::span<const LabeledTemplate> templates) {
  std::ostringstream buf;
  write_templates_csv(buf, templates);
  write_text_file(path, buf.str());
}

nlohmann::json to_json(const GalleryManifest& m) {
  return {{"name", m.name}, {"dimension", m.dimension}, {"attributes", m.attributes}, {"source", m.source}};
}

GalleryManifest manifest_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("manifest must be a JSON object");
  for (const char* key : {"name", "dimension", "attributes", "source"}) {
    if (!j.contains(key)) throw ValidationError(std::string("manifest is missing '") + key + "'");
  }
  GalleryManifest m;
  m.name = get_field<std::string>(j, "name", "");
  m.dimension = get_field<Eigen::Index>(j, "dimension", 0);
  m.attributes = get_field<std::vector<std::string>>(j, "attributes", {});
  m.source = get_field<std::string>(j, "source", "");
  if (m.dimension < 1) throw ValidationError("manifest dimension must be >= 1");
  return m;
}

GalleryManifest read_manifest(const std::filesystem::path& path) {
  return manifest_from_json(read_json_file(path));
}

void write_manifest(const std::filesystem::path& path, const GalleryManifest& m) {
  write_json_file(path, to_json(m));
}

std::filesystem::path manifest_path_for(const std::filesystem::path& csv) {
  auto p = csv;
  p.replace_extension(".manifest.json");
  return p;
}

Gallery load_gallery(const std::filesystem::path& csv,
                     const std::optional<std::filesystem::path>& manifest) {
  auto templates = read_templates_csv(csv);
  if (templates.empty()) throw ValidationError("'" + csv.string() + "' contains no templates");
  if (!manifest) return Gallery::from_templates(std::move(templates));
  const GalleryManifest m = read_manifest(*manifest);
  if (m.dimension != templates.front().embedding.size()) {
    throw ValidationError("manifest dimension " + std::to_string(m.dimension) +
                          " differs from CSV dimension " +
                          std::to_string(templates.front().embedding.size()));
  }
  return Gallery(std::move(templates), AttributeSet(m.attributes));
}

nlohmann::json to_json(const SynthConfig& cfg) {
  return {{"dimension", cfg.dimension},
          {"identities_per_attribute", cfg.identities_per_attribute},
          {"samples_per_identity", cfg.samples_per_identity},
          {"attribute_subspace_dim", cfg.attribute_subspace_dim},
          {"signal_strength", cfg.signal_strength},
          {"within_identity_noise", cfg.within_identity_noise},
          {"between_identity_spread", cfg.between_identity_spread},
          {"seed", cfg.seed},
          {"attributes", cfg.attributes},
          {"probe_identities_per_attribute", cfg.probe_identities_per_attribute},
          {"mated_probes", cfg.mated_probes}};
}

SynthConfig synth_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("synth config must be a JSON object");
  static const std::set<std::string> known = {
      "dimension", "identities_per_attribute", "samples_per_identity", "attribute_subspace_dim",
      "signal_strength", "within_identity_noise", "between_identity_spread", "seed", "attributes",
      "probe_identities_per_attribute", "mated_probes", "enhancer"};
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ValidationError("synth config: unknown key '" + key + "'");
  }
  SynthConfig d;
  SynthConfig c;
  c.dimension = get_field(j, "dimension", d.dimension);
  c.identities_per_attribute = get_field(j, "identities_per_attribute", d.identities_per_attribute);
  c.samples_per_identity = get_field(j, "samples_per_identity", d.samples_per_identity);
  c.attribute_subspace_dim = get_field(j, "attribute_subspace_dim", d.attribute_subspace_dim);
  c.signal_strength = get_field(j, "signal_strength", d.signal_strength);
  c.within_identity_noise = get_field(j, "within_identity_noise", d.within_identity_noise);
  c.between_identity_spread = get_field(j, "between_identity_spread", d.between_identity_spread);
  c.seed = get_field(j, "seed", d.seed);
  c.attributes = get_field(j, "attributes", d.attributes);
  c.probe_identities_per_attribute =
      get_field(j, "probe_identities_per_attribute", d.probe_identities_per_attribute);
  c.mated_probes = get_field(j, "mated_probes", d.mated_probes);
  return c;
}

nlohmann::json to_json(const EnhancerSpec& spec) {
  return {{"kind", std::string(to_string(spec.kind))},
          {"rotation_seed", spec.rotation_seed},
          {"remove", spec.remove}};
}

EnhancerSpec enhancer_spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("enhancer must be a JSON object");
  EnhancerSpec s;
  s.kind = parse_enhancer_kind(get_field<std::string>(j, "kind", "passthrough"));
  s.rotation_seed = get_field(j, "rotation_seed", s.rotation_seed);
  s.remove = get_field(j, "remove", s.remove);
  return s;
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

}  // namespace sbattack
