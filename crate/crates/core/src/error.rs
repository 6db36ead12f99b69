use alloc::string::String;

/// Errors raised across the library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A name does not belong to the entity universe.
    #[error("unknown entity `{0}`")]
    UnknownEntity(String),
    /// An entity name appears twice in a universe.
    #[error("duplicate entity `{0}`")]
    DuplicateEntity(String),
    /// An entity name is empty or contains a reserved character (`+` or `,`).
    #[error("invalid entity name `{0}`")]
    InvalidEntityName(String),
    /// More entities than the bitset width allows.
    #[error("universe has {0} entities, the limit is 64")]
    UniverseTooLarge(usize),
    /// Generating the topology would exceed the configured open-set cap.
    #[error("topology exceeds the cap of {cap} open sets")]
    TopologyTooLarge {
        /// The cap that was hit.
        cap: usize,
    },
    /// A set of entities is not open in the topology.
    #[error("`{0}` is not an open set")]
    NotOpen(String),
    /// A point or value does not fit the space it is used with.
    #[error("space mismatch: {0}")]
    SpaceMismatch(String),
    /// A coordinate vector violates a space's constraints.
    #[error("invalid point: {0}")]
    InvalidPoint(String),
    /// Restriction requested between opens that are not nested.
    #[error("`{to}` is not contained in `{from}`")]
    NotComparable {
        /// Larger open requested as the source.
        from: String,
        /// Smaller open requested as the target.
        to: String,
    },
    /// A basis open (or an intersection of basis opens) has no declared stalk.
    #[error("no stalk declared for basis open `{0}`")]
    MissingIntersectionStalk(String),
    /// A covering inclusion between declared opens has no restriction map.
    #[error("missing restriction `{from}` -> `{to}`")]
    MissingRestriction {
        /// Larger open.
        from: String,
        /// Smaller open.
        to: String,
    },
    /// A restriction was declared on a pair that is not a covering inclusion of declared opens.
    #[error("restriction `{from}` -> `{to}` is not a covering inclusion of declared opens")]
    NotHasseEdge {
        /// Larger open.
        from: String,
        /// Smaller open.
        to: String,
    },
    /// A builtin restriction name is not registered.
    #[error("unknown builtin map `{0}`")]
    UnknownBuiltin(String),
    /// A builtin map is missing a parameter.
    #[error("builtin `{name}` needs parameter `{param}`")]
    MissingParameter {
        /// Builtin name.
        name: String,
        /// Parameter name.
        param: String,
    },
    /// An operation needs Euclidean stalks and linear restrictions.
    #[error("operation requires a linear sheaf")]
    NonlinearSheaf,
    /// An intersection of cover elements is not open.
    #[error("intersection `{0}` of cover elements is not open")]
    IntersectionNotOpen(String),
    /// A cover is malformed.
    #[error("invalid cover: {0}")]
    InvalidCover(String),
    /// A map sends a domain bin outside every codomain bin.
    #[error("domain bin {0} has no image bin")]
    UnmappedBin(usize),
    /// The top stalk cannot be searched by the optimizer.
    #[error("stalk at the whole space cannot be parameterized: {0}")]
    NoTopStalk(String),
    /// Fusion was asked for with an empty assignment.
    #[error("assignment is empty")]
    DegenerateAssignment,
    /// Two assignments (or an assignment and a sheaf) belong to different sheaves.
    #[error("assignments belong to different sheaves")]
    SheafMismatch,
    /// Invalid solver or analysis options.
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    /// A computation produced a non-finite value.
    #[error("non-finite value: {0}")]
    NonFinite(String),
}

/// Library result alias.
pub type Result<T> = core::result::Result<T, Error>;
