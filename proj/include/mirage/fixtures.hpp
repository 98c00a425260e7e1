#pragma once

#include <string>
#include <vector>

namespace mirage::fixtures {

struct FixtureResult {
  std::string path;  // relative to the fixtures directory
  bool ok = false;
  std::string message;
};

struct FixtureReport {
  std::vector<FixtureResult> results;
  bool all_ok = false;
};

// Checks every entry of <dir>/fixtures.manifest: the file's digest matches
// the pinned one and the file loads and validates through its loader.
FixtureReport verify_fixtures(const std::string& dir);

// Regenerates the manifest body for the files listed in the current one
// (used when fixtures are intentionally edited).
std::string manifest_text(const std::string& dir);

}  // namespace mirage::fixtures
