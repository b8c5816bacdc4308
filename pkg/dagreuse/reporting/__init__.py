from .report import (
    CSV_COLUMNS,
    DecisionTally,
    ReportRow,
    build_report,
    format_tally,
    render_csv,
    render_json,
    row_from_record,
    tally_decisions,
    write_report,
)
