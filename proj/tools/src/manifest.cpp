#include <openssl/evp.h>

#include <cstdio>
#include <sstream>

#include "hetlb_tools/commands.hpp"

#ifndef HETLB_VERSION
#define HETLB_VERSION "0.0.0"
#endif

namespace hetlb::tools {

std::string tool_version() { return HETLB_VERSION; }

std::string git_blob_sha1(std::string_view content) {
    std::string blob = "blob " + std::to_string(content.size());
    blob += '\0';
    blob.append(content);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int size = 0;
    EVP_Digest(blob.data(), blob.size(), digest, &size, EVP_sha1(), nullptr);
    std::string hex;
    char buf[3];
    for (unsigned i = 0; i < size; ++i) {
        const unsigned char b = digest[i];
        std::snprintf(buf, sizeof buf, "%02x", b);
        hex += buf;
    }
    return hex;
}

std::string Manifest::header(std::string_view comment) const {
    std::ostringstream os;
    os << comment << "hetlb " << tool_version << '\n'
       << comment << "subcommand: " << subcommand << '\n'
       << comment << "config: " << config_path << '\n'
       << comment << "config_sha1: " << config_sha1 << '\n'
       << comment << "seed: " << seed << '\n'
       << comment << "out: " << out_dir << '\n';
    return os.str();
}

}  // namespace hetlb::tools
