from .catalog import CatalogEntry, MaterializationCatalog, load_node
from .lifecycle import PlannedIteration, prepare_plan, run_iteration
from .session import Scenario, draw_modification, perturb, simulate_session
from .store import IterationRecord, LoadAudit, RunStore, TimelineEvent, record_from_json
