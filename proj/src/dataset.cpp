#include "mdts/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <set>
#include <string_view>

#include "json.hpp"
#include "mdts/error.hpp"
#include "mdts/fileio.hpp"
#include "mdts/rng.hpp"

namespace mdts {

namespace fs = std::filesystem;
using json = nlohmann::json;

const char* ToString(SplitTag tag) { return tag == SplitTag::kInd ? "ind" : "ood"; }

SplitTag ParseSplitTag(const std::string& s) {
  if (s == "ind") return SplitTag::kInd;
  if (s == "ood") return SplitTag::kOod;
  throw Error(ErrorCode::kSchemaViolation, "split must be \"ind\" or \"ood\", got \"" + s + "\"");
}

void DomainDataset::Validate() const {
  const auto n = static_cast<Eigen::Index>(labels.size());
  if (n == 0) throw Error(ErrorCode::kEmptyDataset, "domain '" + id + "' has no samples");
  if (logits.rows() != n || embeddings.rows() != n) {
    throw Error(ErrorCode::kSchemaViolation, "domain '" + id + "': row counts disagree");
  }
  if (logits.cols() < 1 || embeddings.cols() < 1) {
    throw Error(ErrorCode::kSchemaViolation, "domain '" + id + "': empty logit or embedding rows");
  }
  const int num_classes = this->num_classes();
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= num_classes) {
      throw Error(ErrorCode::kLabelOutOfRange, "domain '" + id + "' row " + std::to_string(i) +
                                                   ": label " + std::to_string(y));
    }
  }
  if (!logits.allFinite() || !embeddings.allFinite()) {
    throw Error(ErrorCode::kNonFiniteValue, "domain '" + id + "' contains non-finite values");
  }
  if (oracle_conf) {
    if (oracle_conf->size() != labels.size()) {
      throw Error(ErrorCode::kSchemaViolation, "domain '" + id + "': oracle_conf length");
    }
    const double floor = 1.0 / num_classes;
    for (std::size_t i = 0; i < oracle_conf->size(); ++i) {
      const double c = (*oracle_conf)[i];
      // Tolerate the last-ulp rounding of a max-softmax value.
      if (!(c >= floor - 1e-12 && c <= 1.0)) {
        throw Error(ErrorCode::kSchemaViolation,
                    "domain '" + id + "' row " + std::to_string(i) + ": oracle_conf out of range");
      }
    }
  }
}

DomainDataset Subset(const DomainDataset& domain, std::span<const std::size_t> indices) {
  DomainDataset out;
  out.id = domain.id;
  out.split = domain.split;
  const auto m = static_cast<Eigen::Index>(indices.size());
  out.labels.reserve(indices.size());
  out.logits.resize(m, domain.logits.cols());
  out.embeddings.resize(m, domain.embeddings.cols());
  if (domain.oracle_conf) out.oracle_conf.emplace();
  for (Eigen::Index r = 0; r < m; ++r) {
    const auto src = static_cast<Eigen::Index>(indices[static_cast<std::size_t>(r)]);
    out.labels.push_back(domain.labels[static_cast<std::size_t>(src)]);
    out.logits.row(r) = domain.logits.row(src);
    out.embeddings.row(r) = domain.embeddings.row(src);
    if (domain.oracle_conf) out.oracle_conf->push_back((*domain.oracle_conf)[static_cast<std::size_t>(src)]);
  }
  return out;
}

const DomainDataset* MultiDomainDataset::Find(const std::string& id) const {
  for (const auto& d : domains) {
    if (d.id == id) return &d;
  }
  return nullptr;
}

void MultiDomainDataset::Validate() const {
  if (num_classes < 1 || embedding_dim < 1) {
    throw Error(ErrorCode::kSchemaViolation, "num_classes and embedding_dim must be positive");
  }
  std::set<std::string> seen;
  for (const auto& d : domains) {
    if (!seen.insert(d.id).second) {
      throw Error(ErrorCode::kSchemaViolation, "duplicate domain id '" + d.id + "'");
    }
    if (d.num_classes() != num_classes || d.embedding_dim() != embedding_dim) {
      throw Error(ErrorCode::kSchemaViolation, "domain '" + d.id + "' disagrees on J or p");
    }
    d.Validate();
  }
}

MultiDomainDataset SelectSplit(const MultiDomainDataset& dataset, SplitTag tag) {
  MultiDomainDataset out{dataset.num_classes, dataset.embedding_dim, {}};
  for (const auto& d : dataset.domains) {
    if (d.split == tag) out.domains.push_back(d);
  }
  return out;
}

namespace {

std::vector<std::string_view> SplitFields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

std::string HeaderFor(int num_classes, int embedding_dim, bool with_oracle) {
  std::string h = "label";
  for (int j = 0; j < num_classes; ++j) h += ",logit_" + std::to_string(j);
  for (int j = 0; j < embedding_dim; ++j) h += ",emb_" + std::to_string(j);
  if (with_oracle) h += ",oracle_conf";
  return h;
}

struct CsvContext {
  const fs::path& file;
  std::size_t line_no;

  [[noreturn]] void Fail(ErrorCode code, const std::string& what) const {
    throw Error(code, file.string() + " line " + std::to_string(line_no) + ": " + what);
  }
};

double ParseReal(std::string_view token, const CsvContext& ctx) {
  double v = 0.0;
  const auto* end = token.data() + token.size();
  const auto res = std::from_chars(token.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end || token.empty()) {
    ctx.Fail(ErrorCode::kSchemaViolation, "malformed number '" + std::string(token) + "'");
  }
  if (!std::isfinite(v)) ctx.Fail(ErrorCode::kNonFiniteValue, "non-finite value '" + std::string(token) + "'");
  return v;
}

DomainDataset ReadDomainFile(const fs::path& file, const std::string& id, SplitTag split,
                             std::size_t declared_n, int num_classes, int embedding_dim) {
  const std::string text = ReadFile(file);
  DomainDataset d;
  d.id = id;
  d.split = split;
  std::vector<double> logits;
  std::vector<double> emb;
  std::vector<double> oracle;
  bool with_oracle = false;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header_seen = false;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string_view line(text.data() + pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const CsvContext ctx{file, line_no};
    if (!header_seen) {
      header_seen = true;
      if (line == HeaderFor(num_classes, embedding_dim, true)) {
        with_oracle = true;
      } else if (line != HeaderFor(num_classes, embedding_dim, false)) {
        ctx.Fail(ErrorCode::kSchemaViolation, "header does not match num_classes/embedding_dim");
      }
      continue;
    }
    if (line.empty()) continue;
    const auto fields = SplitFields(line);
    const std::size_t expected =
        1 + static_cast<std::size_t>(num_classes + embedding_dim) + (with_oracle ? 1 : 0);
    if (fields.size() != expected) {
      ctx.Fail(ErrorCode::kSchemaViolation, "expected " + std::to_string(expected) +
                                                " fields, found " + std::to_string(fields.size()));
    }
    int label = 0;
    {
      const auto* end = fields[0].data() + fields[0].size();
      const auto res = std::from_chars(fields[0].data(), end, label);
      if (res.ec != std::errc() || res.ptr != end || fields[0].empty()) {
        ctx.Fail(ErrorCode::kSchemaViolation, "malformed label '" + std::string(fields[0]) + "'");
      }
    }
    if (label < 0 || label >= num_classes) {
      ctx.Fail(ErrorCode::kLabelOutOfRange, "label " + std::to_string(label) + " not in [0, " +
                                                std::to_string(num_classes) + ")");
    }
    d.labels.push_back(label);
    std::size_t f = 1;
    for (int j = 0; j < num_classes; ++j) logits.push_back(ParseReal(fields[f++], ctx));
    for (int j = 0; j < embedding_dim; ++j) emb.push_back(ParseReal(fields[f++], ctx));
    if (with_oracle) oracle.push_back(ParseReal(fields[f++], ctx));
  }
  if (!header_seen) throw Error(ErrorCode::kSchemaViolation, file.string() + ": empty file");
  if (d.labels.size() != declared_n) {
    throw Error(ErrorCode::kSchemaViolation,
                file.string() + ": manifest declares n=" + std::to_string(declared_n) +
                    " but file has " + std::to_string(d.labels.size()) + " rows");
  }
  const auto n = static_cast<Eigen::Index>(d.labels.size());
  d.logits = Eigen::Map<RowMatrix>(logits.data(), n, num_classes);
  d.embeddings = Eigen::Map<RowMatrix>(emb.data(), n, embedding_dim);
  if (with_oracle) d.oracle_conf = std::move(oracle);
  d.Validate();
  return d;
}

template <typename T>
T RequireField(const json& obj, const char* key, const fs::path& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw Error(ErrorCode::kSchemaViolation, where.string() + ": missing field '" + key + "'");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::kSchemaViolation, where.string() + ": field '" + key + "' has wrong type");
  }
}

}  // namespace

MultiDomainDataset Load(const fs::path& manifest_path) {
  fs::path manifest = manifest_path;
  std::error_code ec;
  if (fs::is_directory(manifest, ec)) manifest /= "manifest.json";
  const std::string text = ReadFile(manifest);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kSchemaViolation, manifest.string() + ": " + e.what());
  }
  if (RequireField<int>(doc, "version", manifest) != 1) {
    throw Error(ErrorCode::kSchemaViolation, manifest.string() + ": unsupported version");
  }
  MultiDomainDataset out;
  out.num_classes = RequireField<int>(doc, "num_classes", manifest);
  out.embedding_dim = RequireField<int>(doc, "embedding_dim", manifest);
  if (out.num_classes < 1 || out.embedding_dim < 1) {
    throw Error(ErrorCode::kSchemaViolation, manifest.string() + ": num_classes/embedding_dim must be positive");
  }
  const auto& domains = doc.contains("domains") ? doc["domains"] : json();
  if (!domains.is_array()) {
    throw Error(ErrorCode::kSchemaViolation, manifest.string() + ": 'domains' must be an array");
  }
  const fs::path base = manifest.parent_path();
  for (const auto& entry : domains) {
    const auto id = RequireField<std::string>(entry, "id", manifest);
    const auto file = RequireField<std::string>(entry, "file", manifest);
    const auto split = ParseSplitTag(RequireField<std::string>(entry, "split", manifest));
    const auto n = RequireField<long long>(entry, "n", manifest);
    if (n < 0) throw Error(ErrorCode::kSchemaViolation, manifest.string() + ": negative n");
    out.domains.push_back(ReadDomainFile(base / file, id, split, static_cast<std::size_t>(n),
                                         out.num_classes, out.embedding_dim));
  }
  out.Validate();
  return out;
}

fs::path Save(const MultiDomainDataset& dataset, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error(ErrorCode::kIoFailure, "cannot create directory " + dir.string());
  }
  json manifest;
  manifest["version"] = 1;
  manifest["num_classes"] = dataset.num_classes;
  manifest["embedding_dim"] = dataset.embedding_dim;
  manifest["domains"] = json::array();
  for (const auto& d : dataset.domains) {
    if (d.id.empty() || d.id.find_first_of("/\\") != std::string::npos || d.id == "." || d.id == "..") {
      throw Error(ErrorCode::kInvalidArgument, "domain id '" + d.id + "' is not usable as a file name");
    }
    const std::string file = d.id + ".csv";
    const bool with_oracle = d.oracle_conf.has_value();
    std::string out = HeaderFor(dataset.num_classes, dataset.embedding_dim, with_oracle);
    out += '\n';
    for (std::size_t i = 0; i < d.size(); ++i) {
      out += std::to_string(d.labels[i]);
      for (double v : d.logits_row(i)) {
        out += ',';
        out += FormatDouble(v);
      }
      for (double v : d.embedding_row(i)) {
        out += ',';
        out += FormatDouble(v);
      }
      if (with_oracle) {
        out += ',';
        out += FormatDouble((*d.oracle_conf)[i]);
      }
      out += '\n';
    }
    WriteFileAtomic(dir / file, out);
    manifest["domains"].push_back(
        {{"id", d.id}, {"file", file}, {"split", ToString(d.split)}, {"n", d.size()}});
  }
  const fs::path manifest_path = dir / "manifest.json";
  WriteFileAtomic(manifest_path, manifest.dump(2) + "\n");
  return manifest_path;
}

std::vector<std::size_t> CalibrationIndices(std::size_t n, std::uint64_t seed,
                                            std::size_t domain_index) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(MixSeed(seed, domain_index));
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(i));
    std::swap(perm[i - 1], perm[j]);
  }
  perm.resize((n + 1) / 2);
  std::sort(perm.begin(), perm.end());
  return perm;
}

SplitResult SplitHalf(const MultiDomainDataset& dataset, std::uint64_t seed) {
  SplitResult out;
  out.calibration = {dataset.num_classes, dataset.embedding_dim, {}};
  out.evaluation = {dataset.num_classes, dataset.embedding_dim, {}};
  for (std::size_t k = 0; k < dataset.domains.size(); ++k) {
    const auto& d = dataset.domains[k];
    const std::size_t n = d.size();
    if (n < 2) throw Error(ErrorCode::kDomainTooSmall, d.id);
    const auto cal = CalibrationIndices(n, seed, k);
    std::vector<std::size_t> eval;
    eval.reserve(n - cal.size());
    std::size_t c = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (c < cal.size() && cal[c] == i) {
        ++c;
      } else {
        eval.push_back(i);
      }
    }
    out.calibration.domains.push_back(Subset(d, cal));
    out.evaluation.domains.push_back(Subset(d, eval));
  }
  return out;
}

DomainDataset Pool(const MultiDomainDataset& dataset) {
  if (dataset.domains.empty()) throw Error(ErrorCode::kEmptyInput, "no domains to pool");
  DomainDataset out;
  out.id = "pooled";
  out.split = dataset.domains.front().split;
  Eigen::Index total = 0;
  bool all_oracle = true;
  for (const auto& d : dataset.domains) {
    total += static_cast<Eigen::Index>(d.size());
    all_oracle = all_oracle && d.oracle_conf.has_value();
  }
  out.logits.resize(total, dataset.num_classes);
  out.embeddings.resize(total, dataset.embedding_dim);
  out.labels.reserve(static_cast<std::size_t>(total));
  if (all_oracle) out.oracle_conf.emplace();
  Eigen::Index r = 0;
  for (const auto& d : dataset.domains) {
    const auto n = static_cast<Eigen::Index>(d.size());
    out.logits.middleRows(r, n) = d.logits;
    out.embeddings.middleRows(r, n) = d.embeddings;
    out.labels.insert(out.labels.end(), d.labels.begin(), d.labels.end());
    if (all_oracle) out.oracle_conf->insert(out.oracle_conf->end(), d.oracle_conf->begin(), d.oracle_conf->end());
    r += n;
  }
  return out;
}

}  // namespace mdts
