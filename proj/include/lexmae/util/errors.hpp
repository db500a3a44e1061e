#pragma once

#include <stdexcept>
#include <string>

namespace lexmae {

/// Category codes double as process exit codes for the CLI.
enum class error_category : int {
    usage = 2,
    config = 3,
    dimension = 4,
    format = 5,
    io = 6,
    pipeline_order = 7,
    training = 8,
    evaluation = 9,
    input = 10,
    contract = 11,
};

class error : public std::runtime_error {
  public:
    error(error_category category, const std::string& what)
        : std::runtime_error(what), m_category(category)
    {}

    [[nodiscard]] error_category category() const noexcept { return m_category; }
    [[nodiscard]] int exit_code() const noexcept { return static_cast<int>(m_category); }

  private:
    error_category m_category;
};

#define LEXMAE_DEFINE_ERROR(name, cat)                                                    \
    class name : public error {                                                           \
      public:                                                                             \
        explicit name(const std::string& what) : error(error_category::cat, what) {}      \
    }

LEXMAE_DEFINE_ERROR(config_error, config);
LEXMAE_DEFINE_ERROR(dimension_error, dimension);
LEXMAE_DEFINE_ERROR(format_error, format);
LEXMAE_DEFINE_ERROR(io_error, io);
LEXMAE_DEFINE_ERROR(pipeline_order_error, pipeline_order);
LEXMAE_DEFINE_ERROR(training_divergence_error, training);
LEXMAE_DEFINE_ERROR(evaluation_error, evaluation);
LEXMAE_DEFINE_ERROR(input_error, input);
LEXMAE_DEFINE_ERROR(contract_error, contract);

#undef LEXMAE_DEFINE_ERROR

// Refinements that callers and tests distinguish by type.
class unsupported_version_error : public format_error {
  public:
    using format_error::format_error;
};
class empty_pool_error : public input_error {
  public:
    using input_error::input_error;
};
class length_error : public input_error {
  public:
    using input_error::input_error;
};
class vocab_error : public input_error {
  public:
    using input_error::input_error;
};
class masking_error : public config_error {
  public:
    using config_error::config_error;
};

}  // namespace lexmae
