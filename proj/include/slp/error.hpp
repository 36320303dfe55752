#ifndef SLP_ERROR_HPP
#define SLP_ERROR_HPP

#include <stdexcept>
#include <string>

namespace slp
{
    enum class ErrorCode
    {
        InfeasiblePolytope,
        DegenerateSimplex,
        Unbounded,
        SeedSphereOverlap,
        SeedObstacleConflict,
        MvieFailure,
        NoPath,
        StartInCollision,
        GoalInCollision,
        BridgeFailure,
        CollinearTangent,
        NoSlack,
        GapRisk,
        Underconstrained,
        FreeFallSingularity,
        SingularSystem,
        OutOfDomain,
        DegenerateOverlap,
        OptimizerStall,
        Infeasible,
        MaxIterations,
        PlanFailure,
        UsageError
    };

    inline const char *error_name(ErrorCode c)
    {
        switch (c)
        {
        case ErrorCode::InfeasiblePolytope: return "InfeasiblePolytope";
        case ErrorCode::DegenerateSimplex: return "DegenerateSimplex";
        case ErrorCode::Unbounded: return "Unbounded";
        case ErrorCode::SeedSphereOverlap: return "SeedSphereOverlap";
        case ErrorCode::SeedObstacleConflict: return "SeedObstacleConflict";
        case ErrorCode::MvieFailure: return "MvieFailure";
        case ErrorCode::NoPath: return "NoPath";
        case ErrorCode::StartInCollision: return "StartInCollision";
        case ErrorCode::GoalInCollision: return "GoalInCollision";
        case ErrorCode::BridgeFailure: return "BridgeFailure";
        case ErrorCode::CollinearTangent: return "CollinearTangent";
        case ErrorCode::NoSlack: return "NoSlack";
        case ErrorCode::GapRisk: return "GapRisk";
        case ErrorCode::Underconstrained: return "Underconstrained";
        case ErrorCode::FreeFallSingularity: return "FreeFallSingularity";
        case ErrorCode::SingularSystem: return "SingularSystem";
        case ErrorCode::OutOfDomain: return "OutOfDomain";
        case ErrorCode::DegenerateOverlap: return "DegenerateOverlap";
        case ErrorCode::OptimizerStall: return "OptimizerStall";
        case ErrorCode::Infeasible: return "Infeasible";
        case ErrorCode::MaxIterations: return "MaxIterations";
        case ErrorCode::PlanFailure: return "PlanFailure";
        case ErrorCode::UsageError: return "UsageError";
        }
        return "Unknown";
    }

    class Error : public std::runtime_error
    {
    public:
        Error(ErrorCode code, const std::string &what)
            : std::runtime_error(std::string(error_name(code)) + ": " + what),
              code_(code) {}

        ErrorCode code() const { return code_; }

    private:
        ErrorCode code_;
    };

} // namespace slp

#endif
