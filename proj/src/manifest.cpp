#include "morpho/manifest.hpp"

#include <openssl/evp.h>

#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iterator>
#include <memory>

#include "morpho/error.hpp"

namespace morpho {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

// SOURCE_DATE_EPOCH (seconds) as ISO-8601 UTC.
std::string utc_timestamp(const std::string& epoch) {
  std::size_t used = 0;
  long long secs = 0;
  try {
    secs = std::stoll(epoch, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != epoch.size()) throw ConfigError("SOURCE_DATE_EPOCH must be an integer (got '" + epoch + "')");
  const std::time_t t = static_cast<std::time_t>(secs);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) throw Error("SHA-256 init failed");
  }
  void update(const char* data, std::size_t n) {
    if (EVP_DigestUpdate(ctx_.get(), data, n) != 1) throw Error("SHA-256 update failed");
  }
  std::string hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx_.get(), md, &len) != 1) throw Error("SHA-256 final failed");
    static const char* digits = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
      out += digits[md[i] >> 4];
      out += digits[md[i] & 15];
    }
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read '" + path.string() + "' for digest");
  Sha256 h;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    h.update(buf, static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

std::vector<FileDigest> digest_paths(const std::vector<fs::path>& paths, const std::optional<fs::path>& exclude) {
  std::vector<FileDigest> out;
  const auto skip = [&](const fs::path& p) {
    return exclude && fs::exists(*exclude) && fs::equivalent(p, *exclude);
  };
  for (const auto& p : paths) {
    if (fs::is_directory(p)) {
      std::vector<fs::path> files;
      for (const auto& e : fs::recursive_directory_iterator(p))
        if (e.is_regular_file() && !skip(e.path())) files.push_back(e.path());
      std::sort(files.begin(), files.end());
      for (const auto& f : files) out.push_back({f.generic_string(), sha256_file(f)});
    } else if (fs::is_regular_file(p)) {
      if (!skip(p)) out.push_back({p.generic_string(), sha256_file(p)});
    } else {
      throw FormatError("cannot digest '" + p.string() + "': not found");
    }
  }
  return out;
}

std::string RunManifest::to_json() const {
  ordered_json j;
  j["tool"] = "morpho";
  j["version"] = kToolVersion;
  j["command"] = command;
  j["config"] = ordered_json::parse(config_json);
  j["seed"] = seed ? ordered_json(*seed) : ordered_json(nullptr);
  auto list = [](const std::vector<FileDigest>& d) {
    ordered_json a = ordered_json::array();
    for (const auto& f : d) a.push_back({{"path", f.path}, {"sha256", f.sha256}});
    return a;
  };
  j["inputs"] = list(digest_paths(inputs));
  j["outputs"] = list(digest_paths(outputs, manifest_path_));
  const char* epoch = std::getenv("SOURCE_DATE_EPOCH");
  j["timestamp"] = epoch && *epoch ? ordered_json(utc_timestamp(epoch)) : ordered_json(nullptr);
  return j.dump(2) + "\n";
}

void RunManifest::write(const fs::path& path) const {
  manifest_path_ = path;
  const std::string text = to_json();
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw FormatError("cannot write manifest '" + path.string() + "'");
}

}  // namespace morpho
