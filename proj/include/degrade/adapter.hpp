#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "degrade/image.hpp"
#include "degrade/metrics.hpp"
#include "degrade/severity.hpp"

namespace degrade::adapter {

/// How detector scores are obtained for a generated corpus: an external
/// process speaking the line protocol, a precomputed score file, or the
/// built-in mock detector.
struct DetectorHandle {
    enum class Mode { mock, subprocess, score_file };

    Mode mode = Mode::mock;
    std::string command;               // subprocess mode
    std::filesystem::path score_path;  // score-file mode
    double timeout_seconds = 30.0;

    static DetectorHandle make_mock() { return {}; }
    static DetectorHandle make_subprocess(std::string cmd, double timeout = 30.0) {
        DetectorHandle h;
        h.mode = Mode::subprocess;
        h.command = std::move(cmd);
        h.timeout_seconds = timeout;
        return h;
    }
    static DetectorHandle make_score_file(std::filesystem::path path) {
        DetectorHandle h;
        h.mode = Mode::score_file;
        h.score_path = std::move(path);
        return h;
    }

    /// Parses the CLI spelling: "mock", "cmd:<command>" or "scores:<path>".
    static DetectorHandle parse(const std::string& spec, double timeout = 30.0);

    std::string id() const;
};

/// Deterministic texture-energy scorer: mean absolute 4-neighbour Laplacian
/// of luma, squashed into [0,1). Rises with noise, falls with smoothing.
double mock_score(const Image& img);

/// Scores every manifest row. Subprocess mode sends one absolute image path
/// per line and expects one score in [0,1] per line, in order; score-file
/// mode joins rows by (item id, cell). Exactly one record per row comes back,
/// or a typed error is raised.
std::vector<metrics::PredictionRecord> score_corpus(const DetectorHandle& handle,
                                                    const severity::Manifest& manifest,
                                                    const std::filesystem::path& manifest_dir);

}  // namespace degrade::adapter
