#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "mirage/attack.hpp"
#include "mirage/env.hpp"

namespace testutil {

inline std::string fixtures_dir() { return MIRAGE_FIXTURES_DIR; }

inline std::string fixture(const std::string& name) {
  return (std::filesystem::path(fixtures_dir()) / name).string();
}

inline const mirage::env::EnvironmentTemplate& travelco() {
  static const mirage::env::EnvironmentTemplate tmpl =
      mirage::env::load_template(fixture("travelco.env"));
  return tmpl;
}

inline mirage::env::EnvironmentInstance consumer_instance(std::uint64_t seed = 42) {
  return mirage::env::instantiate(travelco(), {}, seed);
}

inline mirage::env::EnvironmentInstance advanced_instance(std::uint64_t seed = 42) {
  return mirage::env::instantiate(travelco(), {{"perimeter", "advanced"}}, seed);
}

inline const mirage::attack::AttackScenario& lockbox() {
  static const mirage::attack::AttackScenario scenario =
      mirage::attack::load_scenario(fixture("scenarios/lockbox_ransom.scn"));
  return scenario;
}

inline const mirage::attack::AttackScenario& keyring() {
  static const mirage::attack::AttackScenario scenario =
      mirage::attack::load_scenario(fixture("scenarios/keyring_lateral.scn"));
  return scenario;
}

// Fresh scratch directory under the build tree's temp space.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    dir_ = std::filesystem::temp_directory_path() /
           ("mirage_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    std::filesystem::create_directories(dir_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(dir_, ec);
  }
  std::string path(const std::string& name = "") const {
    return name.empty() ? dir_.string() : (dir_ / name).string();
  }

 private:
  std::filesystem::path dir_;
};

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return text;
}

// A minimal single-host template for error-path tests; callers splice extra
// lines into the environment body.
inline std::string tiny_template(const std::string& extra_body = "") {
  return std::string("mirage-template v1\n") +
         "environment tiny {\n"
         "  business_name \"Quiet Harbor Consulting\"\n"
         "  sector \"consulting\"\n"
         "  contact \"desk@quietharbor.test\"\n"
         "  subnet 10.1.0.0/24\n"
         "  host box01 {\n"
         "    address 10.1.0.10\n"
         "    os \"debian-12\"\n"
         "    role workstation\n"
         "    app \"editor\"\n"
         "    file \"/home/kim/notes.txt\" aaaa111122223333\n"
         "  }\n"
         "  persona kim {\n"
         "    role \"analyst\"\n"
         "    host box01\n"
         "    hours 09:00 17:00\n"
         "    app \"editor\"\n"
         "    interest \"chess\"\n"
         "    doc \"/home/kim/notes.txt\"\n"
         "    rate 4.0\n"
         "  }\n" +
         extra_body +
         "  perimeter open {\n"
         "    default allow\n"
         "  }\n"
         "  use_perimeter open\n"
         "}\n";
}

}  // namespace testutil
