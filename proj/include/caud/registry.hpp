#pragma once

#include <memory>
#include <string>
#include <vector>

#include "caud/cipher.hpp"
#include "caud/huncc.hpp"

namespace caud {

// Everything a scheme factory can be told; unset members take scheme
// defaults. Widths are bits. Fault knobs only apply to the *_faulted
// registry names; absent periods there fall back to the published 100000.
struct SchemeOptions {
    std::size_t baseline_bits = 16;         // identity, otp, xor_const
    std::size_t rsa_modulus_bits = 1024;
    std::size_t rsa_message_bits = 128;
    FaultConfig faults;
    HunccConfig huncc;
};

inline const std::vector<std::string>& scheme_registry_names() {
    static const std::vector<std::string> names = {
        "identity",  "otp",      "xor_const",        "aes_ecb",
        "aes_ctr",   "aes_ctr_faulted",              "des",
        "des_rand",  "rsa_plain", "rsa_oaep",        "rsa_oaep_faulted",
        "huncc",     "huncc_individual"};
    return names;
}

inline std::unique_ptr<CipherScheme> make_scheme(const std::string& name,
                                                 const SchemeOptions& opt = {}) {
    opt.faults.validate();
    if (name == "identity") return std::make_unique<IdentityScheme>(opt.baseline_bits);
    if (name == "otp") return std::make_unique<OtpScheme>(opt.baseline_bits);
    if (name == "xor_const") return std::make_unique<XorConstScheme>(opt.baseline_bits);
    if (name == "aes_ecb") return std::make_unique<AesEcbScheme>();
    if (name == "aes_ctr") return std::make_unique<AesCtrScheme>();
    if (name == "aes_ctr_faulted")
        return std::make_unique<AesCtrScheme>(opt.faults.ctr_reset_period.value_or(100000));
    if (name == "des") return std::make_unique<DesScheme>();
    if (name == "des_rand") return std::make_unique<DesRandScheme>();
    if (name == "rsa_plain")
        return std::make_unique<RsaPlainScheme>(opt.rsa_modulus_bits, opt.rsa_message_bits);
    if (name == "rsa_oaep")
        return std::make_unique<RsaOaepScheme>(opt.rsa_modulus_bits, opt.rsa_message_bits);
    if (name == "rsa_oaep_faulted")
        return std::make_unique<RsaOaepScheme>(
            opt.rsa_modulus_bits, opt.rsa_message_bits,
            opt.faults.reuse_oaep_seed_period.value_or(100000));
    if (name == "huncc") return std::make_unique<HunccScheme>(opt.huncc);
    if (name == "huncc_individual") return std::make_unique<HunccIndividualScheme>(opt.huncc);

    std::string known;
    for (const auto& n : scheme_registry_names()) {
        if (!known.empty()) known += ", ";
        known += n;
    }
    throw UsageError("unknown scheme '" + name + "' (known: " + known + ")");
}

} // namespace caud
