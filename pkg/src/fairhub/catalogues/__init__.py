"""Asset catalogues: antibodies, mouse lines, iPSC cell models."""

from .antibodies import (
    Antibody,
    AntibodyCatalogue,
    AntibodyKind,
    ApplicationAssessment,
    Clonality,
    RatingOutOfRange,
    UnknownAntibody,
)
from .cell_lines import (
    CellLine,
    CellLineCatalogue,
    CellLineKind,
    MockNamingService,
    NamingClient,
    NamingServiceUnavailable,
    UnknownCellLine,
)
from .mouse_lines import (
    BreedingType,
    InvalidLabCode,
    MissingConstruct,
    Mouse,
    MouseLine,
    MouseLineCatalogue,
    MutationKind,
    MutationSpec,
    Sex,
    UnknownLine,
    FutureBirthDate,
    generate_mouse_line_name,
)
from .spreadsheets import (
    ANTIBODY_CSV_HEADER,
    CELL_LINE_CSV_HEADER,
    HeaderMismatch,
    RowValidationError,
    export_antibodies_csv,
    export_cell_lines_csv,
    import_antibodies_csv,
    import_cell_lines_csv,
)

__all__ = [
    "ANTIBODY_CSV_HEADER",
    "BreedingType",
    "Antibody",
    "AntibodyCatalogue",
    "AntibodyKind",
    "ApplicationAssessment",
    "CELL_LINE_CSV_HEADER",
    "CellLine",
    "CellLineCatalogue",
    "CellLineKind",
    "Clonality",
    "FutureBirthDate",
    "HeaderMismatch",
    "InvalidLabCode",
    "MissingConstruct",
    "MockNamingService",
    "Mouse",
    "MouseLine",
    "MouseLineCatalogue",
    "MutationKind",
    "MutationSpec",
    "NamingClient",
    "NamingServiceUnavailable",
    "RatingOutOfRange",
    "RowValidationError",
    "Sex",
    "UnknownAntibody",
    "UnknownCellLine",
    "UnknownLine",
    "export_antibodies_csv",
    "export_cell_lines_csv",
    "generate_mouse_line_name",
    "import_antibodies_csv",
    "import_cell_lines_csv",
]
