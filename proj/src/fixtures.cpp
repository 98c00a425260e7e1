#include "mirage/fixtures.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mirage/attack.hpp"
#include "mirage/common.hpp"
#include "mirage/digest.hpp"
#include "mirage/env.hpp"
#include "mirage/experiment.hpp"

namespace mirage::fixtures {

namespace fs = std::filesystem;

namespace {

constexpr const char* kManifestName = "fixtures.manifest";

std::vector<std::pair<std::string, std::string>> read_manifest(const std::string& dir) {
  const std::string path = (fs::path(dir) / kManifestName).string();
  std::ifstream in(path, std::ios::binary);
  if (!in.is_open()) fail(ErrorKind::not_found, "fixture manifest '" + path + "' not found");
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string a, b;
    if (!(fields >> a >> b))
      fail(ErrorKind::parse, path + " line " + std::to_string(line_no) + ": expected two fields",
           line_no);
    if (!header_seen) {
      if (a != "mirage-fixtures" || b != "v1")
        fail(ErrorKind::parse, path + ": bad header", line_no);
      header_seen = true;
      continue;
    }
    entries.emplace_back(a, b);
  }
  if (!header_seen) fail(ErrorKind::parse, path + ": missing header");
  return entries;
}

// Loads a fixture through the loader its extension selects.
void load_by_type(const std::string& path) {
  const std::string ext = fs::path(path).extension().string();
  if (ext == ".env") {
    env::load_template(path);
  } else if (ext == ".scn") {
    attack::load_scenario(path);
  } else if (ext == ".sig") {
    attack::load_signature_db(path);
  } else if (ext == ".exp") {
    harness::ExperimentSpec spec = harness::load_experiment(path);
    env::load_template(spec.template_path);
    attack::load_scenario(spec.scenario_path);
  } else {
    fail(ErrorKind::validation, "no loader for fixture type '" + ext + "'");
  }
}

}  // namespace

FixtureReport verify_fixtures(const std::string& dir) {
  FixtureReport report;
  report.all_ok = true;
  for (const auto& [relative, digest] : read_manifest(dir)) {
    FixtureResult result;
    result.path = relative;
    const std::string full = (fs::path(dir) / relative).string();
    try {
      const std::string actual = file_digest(full);
      if (actual != digest) {
        result.message = "digest mismatch: expected " + digest + ", got " + actual;
      } else {
        load_by_type(full);
        result.ok = true;
        result.message = "ok";
      }
    } catch (const Error& e) {
      result.message = e.what();
    }
    if (!result.ok) report.all_ok = false;
    report.results.push_back(std::move(result));
  }
  return report;
}

std::string manifest_text(const std::string& dir) {
  std::ostringstream out;
  out << "mirage-fixtures v1\n";
  for (const auto& [relative, digest] : read_manifest(dir)) {
    (void)digest;
    out << relative << " " << file_digest((fs::path(dir) / relative).string()) << "\n";
  }
  return out.str();
}

}  // namespace mirage::fixtures
