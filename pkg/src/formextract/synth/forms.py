"""Page drafts for the synthetic forms and their ground-truth values.

A draft lists text items on the character grid, checkboxes and rules in
page coordinates. Drafts are rendered to content streams only at the end,
so perturbations edit drafts rather than bytes.
"""

from __future__ import annotations

import datetime as dt
import random
from dataclasses import dataclass, field

from ..pdf.content import format_number, serialize_value

PAGE_WIDTH = 612.0
PAGE_HEIGHT = 792.0
COL_PITCH = 6.0
ROW_PITCH = 12.0
FONT_SIZE = 10
BOX_SIDE = 19.2
BOX_STROKE = 1.0
X_STROKE = 2.5
X_INSET = 1.0
# box centres sit a little above the text baseline of their anchor row
BOX_RAISE = 4.0
RULE_GRAY = 0.5

FIRST_NAMES = ["Alan", "Maria", "Jane", "Omar", "Grace", "Peter", "Lucia", "Henry", "Nadia", "Samuel", "Irene", "Tomas"]
LAST_NAMES = ["Reyes", "Smith", "Okafor", "Nguyen", "Kowalski", "Brennan", "Haddad", "Lindqvist", "Moreau", "Patel"]
OPO_NAMES = [
    "Gift of Life Donor Program",
    "LifeShare of the Carolinas",
    "Mid-America Transplant",
    "New England Donor Services",
    "Donor Alliance",
]
LOCATIONS = ["ICU Room 12", "Operating Room 3", "Surgical ICU Bed 4", "Neuro ICU Room 7", "PACU Bay 2"]
COMFORT_MEDS = ["Morphine 4 mg IV", "Fentanyl 50 mcg IV", "Lorazepam 2 mg IV", "None"]
HOSPITALS = ["St. Luke Medical Center", "Riverside General Hospital", "Mercy Regional", "University Hospital"]
CAUSES = ["Anoxia", "Head Trauma", "Cerebrovascular Accident", "Cardiac Arrest"]
PUMPS = ["LifePort 1.1", "RM3", "WAVES", "LifePort Kidney Transporter"]
FLUIDS = ["Normal Saline", "D5W", "Lactated Ringers", "Albumin 5%", "Packed RBC"]
MEDS = [("Dopamine", "mcg/kg/min"), ("Norepinephrine", "mcg/min"), ("Vasopressin", "units/hr"), ("Insulin", "units/hr")]
COMMENTS = [
    "Family at bedside during rounds.",
    "Hemodynamics stable overnight.",
    "Chest x-ray shows mild infiltrates.",
    "Awaiting echo results from cardiology.",
    "Urine output improved after fluid bolus.",
]
ZONES = ["EST", "CST", "MST", "PST", "EDT", "CDT"]
YES_VARIANTS = ["Yes", "Y", "YES", "yes"]
NO_VARIANTS = ["No", "N", "NO", "no"]
SOLUTIONS = [("UW", "UW"), ("Belzer", "UW"), ("HTK", "HTK"), ("Custodiol", "HTK"), ("IGL-1", "IGL-1")]
VOLUME_UNITS = [("mL", "mL"), ("ml", "mL"), ("cc", "mL")]
HEPARIN_UNITS = [("units", "units"), ("U", "units"), ("IU", "units")]
APPEARANCES = [("Normal", "Normal"), ("WNL", "Normal"), ("Fatty", "Fatty"), ("Firm", "Firm"), ("Mottled", "Mottled")]
SIDES = [("Left", "Left"), ("L", "Left"), ("Right", "Right"), ("R", "Right")]
SEXES = [("M", "Male"), ("Male", "Male"), ("F", "Female"), ("Female", "Female")]
VENT_MODES = [("AC", "AC"), ("A/C", "AC"), ("SIMV", "SIMV"), ("PRVC", "PRVC"), ("CPAP", "CPAP")]


@dataclass
class TextItem:
    row: int
    col: int
    text: str


@dataclass
class Box:
    cx: float
    cy: float
    checked: bool
    field: str
    style: str = "x"  # "x" (diagonals) or "fill"


@dataclass
class PageDraft:
    form_id: str
    texts: list[TextItem] = field(default_factory=list)
    boxes: list[Box] = field(default_factory=list)
    rules: list[tuple[float, float, float, float]] = field(default_factory=list)
    literal_nan: bool = False

    def put(self, row: int, col: int, text: str) -> None:
        self.texts.append(TextItem(row, col, text))

    def rule_below(self, row: int, x0: float = 36.0, x1: float = 576.0) -> None:
        y = PAGE_HEIGHT - row * ROW_PITCH - 4.0
        self.rules.append((x0, y, x1, y))


@dataclass
class DocumentDraft:
    form_id: str
    pages: list[PageDraft]
    tables: dict[str, list[dict]]
    generated_at: dt.datetime
    version_note: str


def anchor_center(row: int, col: int) -> tuple[float, float]:
    return col * COL_PITCH, PAGE_HEIGHT - row * ROW_PITCH + BOX_RAISE


def person(rng: random.Random, title: bool = False) -> str:
    name = f"{rng.choice(FIRST_NAMES)} {rng.choice(LAST_NAMES)}"
    if rng.random() < 0.3:
        name = f"{rng.choice(FIRST_NAMES)} {rng.choice('ABCDEFGHJKLMNPRSTW')}. {rng.choice(LAST_NAMES)}"
    return f"Dr. {name}" if title and rng.random() < 0.5 else name


def donor_id(rng: random.Random) -> str:
    return "".join(rng.choice("ABCDEFGHJKLMNPRSTUVWXYZ") for _ in range(3)) + f"{rng.randrange(10000):04d}"


def some_date(rng: random.Random) -> dt.date:
    return dt.date(2021, 1, 1) + dt.timedelta(days=rng.randrange(730))


def fmt_date(rng: random.Random, d: dt.date) -> str:
    return d.isoformat() if rng.random() < 0.5 else f"{d.month:02d}/{d.day:02d}/{d.year}"


def hhmm(t: dt.datetime | dt.time, compact: bool = False) -> str:
    return f"{t.hour:02d}{t.minute:02d}" if compact else f"{t.hour:02d}:{t.minute:02d}"


def tv(value):
    """Ground-truth JSON encoding of a value."""
    if isinstance(value, dt.datetime):
        return value.isoformat(timespec="seconds")
    if isinstance(value, dt.time):
        return f"{value:%H:%M}"
    if isinstance(value, dt.date):
        return value.isoformat()
    return value


def _start(rng: random.Random, day: dt.date) -> dt.datetime:
    return dt.datetime.combine(day, dt.time(rng.randrange(6, 20), rng.randrange(60)))


# -- forms ---------------------------------------------------------------


def vitals_series(rng: random.Random, n_rows: int, start: dt.datetime, zone: str) -> list[dict]:
    """Agonal-phase vitals: decline to arrest, true zeros, then trailing blank rows."""
    if n_rows == 0:
        return []
    n_missing = rng.randrange(0, max(1, n_rows // 3))
    n_zero = rng.randrange(0, max(1, (n_rows - n_missing) // 2))
    n_live = n_rows - n_missing - n_zero
    hr, sys_, dia, rr, sao2 = rng.randrange(90, 125), rng.randrange(130, 210), rng.randrange(60, 105), rng.randrange(8, 30), rng.randrange(70, 100)
    rows = []
    for minute in range(n_rows):
        ts = start + dt.timedelta(minutes=minute)
        stamp = f"{ts:%Y-%m-%d %H:%M} {zone}"
        if minute < n_live:
            frac = 1.0 - minute / max(1, n_live)
            values = [round(v * (0.4 + 0.6 * frac)) + rng.randrange(-3, 4) for v in (hr, sys_, dia)]
            values = [max(1, v) for v in values]
            mean = round((values[1] + 2 * values[2]) / 3)
            vitals = [values[0], values[1], values[2], mean, max(0, rr - minute), max(0, round(sao2 * frac))]
        elif minute < n_live + n_zero:
            vitals = [0] * 6
        else:
            vitals = [None] * 6
        rows.append(
            dict(zip(["minute", "timestamp", "hr", "bp_systolic", "bp_diastolic", "map", "rr", "sao2"], [minute, stamp, *vitals]))
        )
    return rows


VITALS_COLUMNS = [36, 42, 50, 58, 64, 69]


def draw_vitals_page(donor: str, withdrawal: dt.date, rows: list[dict], rng: random.Random, literal_nan=False) -> PageDraft:
    page = PageDraft("dcd_flowsheet", literal_nan=literal_nan)
    page.put(3, 6, "DCD FLOWSHEET")
    page.put(5, 6, f"Donor ID: {donor}")
    page.put(5, 40, f"Withdrawal Date: {fmt_date(rng, withdrawal)}")
    for col, label in zip([6, 14, *VITALS_COLUMNS], ["Minute", "Time", "HR", "BP Sys", "BP Dia", "MAP", "RR", "SaO2"]):
        page.put(7, col, label)
    page.rule_below(7)
    for i, r in enumerate(rows):
        line = 8 + i
        page.put(line, 7, str(r["minute"]))
        page.put(line, 14, r["timestamp"])
        for col, key in zip(VITALS_COLUMNS, ["hr", "bp_systolic", "bp_diastolic", "map", "rr", "sao2"]):
            if r[key] is not None:
                page.put(line, col, str(r[key]))
            elif literal_nan:
                page.put(line, col, "NaN")
    return page


def preop_values(rng: random.Random, donor: str, withdrawal: dt.datetime) -> tuple[dict, dict, bool]:
    """Returns (printed strings, truth values, heparin checkbox state)."""
    ext = rng.random() < 0.8
    given = rng.random() < 0.7
    box_checked = given and rng.random() < 0.75
    show_dose = given and (not box_checked or rng.random() < 0.8)
    show_time = show_dose and rng.random() < 0.9
    t = withdrawal
    times = {
        "extubation_time": t + dt.timedelta(minutes=rng.randrange(1, 6)),
        "heparin_time": t + dt.timedelta(minutes=rng.randrange(2, 12)),
        "asystole_time": t + dt.timedelta(minutes=rng.randrange(12, 40)),
    }
    times["declaration_time"] = times["asystole_time"] + dt.timedelta(minutes=5)
    times["incision_time"] = times["declaration_time"] + dt.timedelta(minutes=rng.randrange(3, 10))
    times["cross_clamp_time"] = times["incision_time"] + dt.timedelta(minutes=rng.randrange(2, 8))
    form_date = withdrawal.date() + dt.timedelta(days=rng.randrange(0, 2))
    dose = rng.choice([5000, 10000, 20000, 25000, 30000, 40000])
    unit_text, unit = rng.choice(HEPARIN_UNITS)
    sol_text, sol = rng.choice(SOLUTIONS)
    vol_text, vol_unit = rng.choice(VOLUME_UNITS)
    volume = rng.choice([1000, 2000, 3000, 4000, 5000])
    yn = lambda flag: (rng.choice(YES_VARIANTS if flag else NO_VARIANTS), "Yes" if flag else "No")  # noqa: E731
    ext_text, ext_val = yn(ext)
    reg_text, reg_val = yn(rng.random() < 0.3)
    fam_text, fam_val = yn(rng.random() < 0.6)
    truth = {
        "donor_id": donor,
        "form_date": form_date,
        "opo_name": rng.choice(OPO_NAMES),
        "coordinator": person(rng),
        "withdrawal_location": rng.choice(LOCATIONS),
        "withdrawal_date": withdrawal.date(),
        "withdrawal_time": withdrawal.time(),
        "extubated": ext_val,
        "extubation_time": times["extubation_time"].time() if ext else None,
        "comfort_care": rng.choice(COMFORT_MEDS),
        "heparin": "Yes" if given else "No",
        "heparin_dosage": dose if show_dose else None,
        "heparin_unit": unit if show_dose else None,
        "heparin_time": times["heparin_time"].time() if show_time else None,
        "regitine": reg_val,
        "family_present": fam_val,
        "pronouncing_physician": person(rng, title=True),
        "asystole_time": times["asystole_time"].time(),
        "declaration_time": times["declaration_time"].time(),
        "incision_time": times["incision_time"].time(),
        "cross_clamp_time": times["cross_clamp_time"].time(),
        "flush_solution": sol,
        "flush_volume": volume,
        "flush_unit": vol_unit,
    }
    printed = {
        "form_date": fmt_date(rng, form_date),
        "withdrawal_date": withdrawal.date().isoformat(),
        "extubated": ext_text,
        "regitine": reg_text,
        "family_present": fam_text,
        "heparin_unit": unit_text,
        "flush_solution": sol_text,
        "flush_unit": vol_text,
        "heparin_time": hhmm(times["heparin_time"], compact=True),
    }
    return printed, truth, box_checked


def draw_preop_page(printed: dict, truth: dict, box_checked: bool, rng: random.Random) -> PageDraft:
    v = {k: tv(x) for k, x in truth.items()}
    v.update(printed)
    page = PageDraft("pre_operative_management")
    page.put(3, 6, "PRE-OPERATIVE MANAGEMENT")
    page.put(5, 6, f"Donor ID: {v['donor_id']}")
    page.put(5, 46, f"Form Date: {v['form_date']}")
    page.put(6, 6, f"OPO: {v['opo_name']}")
    page.put(7, 6, f"Coordinator: {v['coordinator']}")
    page.put(9, 6, f"Withdrawal Location: {v['withdrawal_location']}")
    page.put(10, 6, f"Withdrawal Date: {v['withdrawal_date']}")
    page.put(10, 46, f"Withdrawal Time: {v['withdrawal_time']}")
    page.put(12, 6, f"Extubated: {v['extubated']}")
    page.put(12, 46, "Extubation Time:" + (f" {v['extubation_time']}" if truth["extubation_time"] else ""))
    page.put(13, 6, f"Comfort Care Medications: {v['comfort_care']}")
    page.put(15, 6, "Heparin:")
    dose = "Dosage:"
    if truth["heparin_dosage"] is not None:
        dose += f" {truth['heparin_dosage']} {v['heparin_unit']}"
    page.put(15, 20, dose)
    page.put(15, 46, "Time:" + (f" {v['heparin_time']}" if truth["heparin_time"] else ""))
    cx, cy = anchor_center(15, 16)
    page.boxes.append(Box(cx, cy, box_checked, "heparin", rng.choice(["x", "fill"])))
    page.put(17, 6, f"Regitine: {v['regitine']}")
    page.put(18, 6, f"Family Present: {v['family_present']}")
    page.put(19, 6, f"Pronouncing Physician: {v['pronouncing_physician']}")
    page.put(21, 6, f"Asystole Time: {v['asystole_time']}")
    page.put(21, 46, f"Declaration Time: {v['declaration_time']}")
    page.put(22, 6, f"Incision Time: {v['incision_time']}")
    page.put(22, 46, f"Cross Clamp Time: {v['cross_clamp_time']}")
    page.put(24, 6, f"Flush Solution: {v['flush_solution']}")
    page.put(24, 46, f"Flush Volume: {truth['flush_volume']} {v['flush_unit']}")
    for row in (4, 11, 20):
        page.rule_below(row)
    return page


def make_dcd(rng: random.Random, n_vitals: tuple[int, int] = (5, 40)) -> DocumentDraft:
    donor = donor_id(rng)
    day = some_date(rng)
    start = _start(rng, day)
    zone = rng.choice(ZONES)
    rows = vitals_series(rng, rng.randint(*n_vitals), start, zone)
    printed, truth, box = preop_values(rng, donor, start)
    pages = [draw_vitals_page(donor, day, rows, rng), draw_preop_page(printed, truth, box, rng)]
    vitals_truth = [
        {
            "Minute": r["minute"],
            "Time": r["timestamp"],
            "HR": r["hr"],
            "BP_Systolic": r["bp_systolic"],
            "BP_Diastolic": r["bp_diastolic"],
            "MAP": r["map"],
            "RR": r["rr"],
            "SaO2": r["sao2"],
        }
        for r in rows
    ]
    tables = {
        "dcd_flowsheet": vitals_truth,
        "pre_operative_management": [{k: tv(x) for k, x in truth.items()}],
    }
    return DocumentDraft("dcd_flowsheet", pages, tables, *_meta(rng, start))


LIVER_BOXES = [
    ("steatosis", 10, 8, "Steatosis"),
    ("fibrosis", 10, 40, "Fibrosis"),
    ("biopsy_performed", 12, 8, "Biopsy Performed"),
    ("vascular_anomaly", 12, 40, "Vascular Anomaly"),
    ("arterial_variant", 14, 8, "Arterial Variant"),
    ("bile_duct_injury", 14, 40, "Bile Duct Injury"),
    ("capsular_tear", 16, 8, "Capsular Tear"),
    ("split_liver", 16, 40, "Split Liver"),
]


def make_liver(rng: random.Random, states: list[bool] | None = None) -> DocumentDraft:
    donor = donor_id(rng)
    day = some_date(rng)
    if states is None:
        states = [rng.random() < 0.4 for _ in LIVER_BOXES]
    app_text, app = rng.choice(APPEARANCES)
    weight = rng.randrange(900, 2600)
    comments = rng.choice(COMMENTS) if rng.random() < 0.5 else None
    truth = {
        "donor_id": donor,
        "recovery_date": day.isoformat(),
        "surgeon": person(rng, title=True),
        "liver_weight": weight,
        "appearance": app,
    }
    page = PageDraft("liver_data")
    page.put(3, 6, "LIVER DATA")
    page.put(5, 6, f"Donor ID: {donor}")
    page.put(5, 46, f"Recovery Date: {fmt_date(rng, day)}")
    page.put(6, 6, f"Recovering Surgeon: {truth['surgeon']}")
    page.put(7, 6, f"Liver Weight: {weight} g")
    page.put(7, 46, f"Appearance: {app_text}")
    page.rule_below(8)
    for (name, row, col, label), checked in zip(LIVER_BOXES, states):
        page.put(row, col + 3, label)
        cx, cy = anchor_center(row, col)
        page.boxes.append(Box(cx, cy, checked, name, rng.choice(["x", "fill"])))
        truth[name] = checked
    page.rule_below(17)
    if comments:
        page.put(18, 6, f"Comments: {comments}")
    truth["comments"] = comments
    start = _start(rng, day)
    return DocumentDraft("liver_data", [page], {"liver_data": [truth]}, *_meta(rng, start))


def make_kidney(rng: random.Random) -> DocumentDraft:
    donor = donor_id(rng)
    day = some_date(rng)
    side_text, side = rng.choice(SIDES)
    pump = rng.choice(PUMPS)
    page = PageDraft("kidney_perfusion_flow_sheet")
    page.put(3, 6, "KIDNEY PERFUSION FLOW SHEET")
    page.put(5, 6, f"Donor ID: {donor}")
    page.put(5, 46, f"Kidney: {side_text}")
    page.put(6, 6, f"Pump: {pump}")
    cols = [6, 14, 30, 48, 62]
    for col, label in zip(cols, ["Time", "Flow (mL/min)", "Pressure (mmHg)", "Resistance", "Temp (C)"]):
        page.put(8, col, label)
    page.rule_below(8)
    t = _start(rng, day)
    rows = []
    for i in range(rng.randint(3, 12)):
        flow = rng.randrange(40, 180)
        pressure = rng.randrange(20, 45)
        resistance = float(f"{pressure / flow:.2f}")
        temp = float(f"{rng.uniform(2.0, 8.0):.1f}")
        cells = [hhmm(t), str(flow), str(pressure), f"{resistance:.2f}", f"{temp:.1f}"]
        for col, text in zip(cols, cells):
            page.put(9 + i, col, text)
        rows.append(
            {
                "donor_id": donor,
                "kidney_side": side,
                "pump_model": pump,
                "perf_time": hhmm(t),
                "flow": flow,
                "pressure": pressure,
                "resistance": resistance,
                "temp": temp,
            }
        )
        t += dt.timedelta(minutes=rng.choice([15, 30, 60]))
    return DocumentDraft("kidney_perfusion_flow_sheet", [page], {"kidney_perfusion_flow_sheet": rows}, *_meta(rng, t))


def make_referral(rng: random.Random) -> DocumentDraft:
    day = some_date(rng)
    t = _start(rng, day)
    sex_text, sex = rng.choice(SEXES)
    vent = rng.random() < 0.8
    vent_text = rng.choice(YES_VARIANTS if vent else NO_VARIANTS)
    notes = rng.choice(COMMENTS) if rng.random() < 0.5 else None
    truth = {
        "referral_date": day.isoformat(),
        "referral_time": hhmm(t),
        "caller": person(rng),
        "hospital": rng.choice(HOSPITALS),
        "donor_age": rng.randrange(1, 75),
        "sex": sex,
        "cause_of_death": rng.choice(CAUSES),
        "ventilated": "Yes" if vent else "No",
        "notes": notes,
    }
    page = PageDraft("referral_worksheet")
    page.put(3, 6, "REFERRAL WORKSHEET")
    page.put(5, 6, f"Referral Date: {fmt_date(rng, day)}")
    page.put(5, 46, f"Referral Time: {truth['referral_time']}")
    page.put(6, 6, f"Caller: {truth['caller']}")
    page.put(7, 6, f"Hospital: {truth['hospital']}")
    page.put(8, 6, f"Donor Age: {truth['donor_age']}")
    page.put(8, 46, f"Sex: {sex_text}")
    page.put(9, 6, f"Cause of Death: {truth['cause_of_death']}")
    page.put(10, 6, f"Ventilated: {vent_text}")
    if notes:
        page.put(12, 6, f"Notes: {notes}")
    return DocumentDraft("referral_worksheet", [page], {"referral_worksheet": [truth]}, *_meta(rng, t))


def make_flowsheet(rng: random.Random) -> DocumentDraft:
    donor = donor_id(rng)
    day = some_date(rng)
    page = PageDraft("flowsheet")
    page.put(3, 6, "FLOWSHEET")
    page.put(5, 6, f"Donor ID: {donor}")
    page.put(5, 46, f"Date: {fmt_date(rng, day)}")
    head = {"donor_id": donor, "sheet_date": day.isoformat()}
    tables: dict[str, list[dict]] = {}
    row = 7
    t0 = _start(rng, day)

    def section(title, headers, make_row, n):
        nonlocal row
        page.put(row, 6, title)
        row += 1
        if headers:
            for col, label in headers:
                page.put(row, col, label)
            page.rule_below(row)
            row += 1
        out = []
        for i in range(n):
            cells, truth = make_row(t0 + dt.timedelta(hours=i))
            for col, text in cells:
                page.put(row, col, text)
            out.append({**head, **truth})
            row += 1
        row += 1
        return out

    def vs(t):
        hr, s, d, temp, spo2 = rng.randrange(60, 130), rng.randrange(90, 180), rng.randrange(50, 100), float(f"{rng.uniform(35.5, 39.0):.1f}"), rng.randrange(88, 101)
        cells = [(6, hhmm(t)), (14, str(hr)), (22, f"{s}/{d}"), (32, f"{temp:.1f}"), (40, str(spo2))]
        return cells, {"vs_time": hhmm(t), "vs_hr": hr, "vs_systolic": s, "vs_diastolic": d, "vs_temp": temp, "vs_spo2": spo2}

    def vent(t):
        mode_text, mode = rng.choice(VENT_MODES)
        fio2, peep, tidal, rate = rng.choice([30, 40, 50, 60, 100]), rng.choice([5, 8, 10]), rng.randrange(350, 650, 10), rng.randrange(10, 24)
        cells = [(6, hhmm(t)), (14, mode_text), (22, str(fio2)), (30, str(peep)), (38, str(tidal)), (54, str(rate))]
        return cells, {"vent_time": hhmm(t), "vent_mode": mode, "fio2": fio2, "peep": peep, "tidal_volume": tidal, "vent_rate": rate}

    def intake(t):
        fluid, vol = rng.choice(FLUIDS), rng.randrange(50, 1000, 50)
        return [(6, hhmm(t)), (14, fluid), (40, str(vol))], {"intake_time": hhmm(t), "intake_fluid": fluid, "intake_volume": vol}

    def meds(t):
        name, unit = rng.choice(MEDS)
        dose = rng.choice([1, 2, 5, 10, 0.04, 2.5])
        cells = [(6, hhmm(t)), (14, name), (34, format_number(dose)), (44, unit)]
        return cells, {"med_time": hhmm(t), "medication": name, "med_dose": dose, "med_unit": unit}

    def output(t):
        urine = rng.randrange(0, 400, 5)
        other = rng.randrange(0, 200, 10) if rng.random() < 0.5 else None
        cells = [(6, hhmm(t)), (14, str(urine))] + ([(30, str(other))] if other is not None else [])
        return cells, {"out_time": hhmm(t), "urine": urine, "other_output": other}

    def comment(t):
        text = rng.choice(COMMENTS)
        return [(6, text)], {"comment_text": text}

    n = lambda: rng.randint(1, 4)  # noqa: E731
    tables["vital_signs"] = section("VITAL SIGNS", [(6, "Time"), (14, "HR"), (22, "BP"), (32, "Temp"), (40, "SpO2")], vs, n())
    tables["vent_settings"] = section(
        "VENT SETTINGS", [(6, "Time"), (14, "Mode"), (22, "FiO2"), (30, "PEEP"), (38, "Tidal Volume"), (54, "Rate")], vent, n()
    )
    tables["intake"] = section("INTAKE", [(6, "Time"), (14, "Fluid"), (40, "Volume (mL)")], intake, n())
    tables["medications_dosage"] = section(
        "Medications Dosage", [(6, "Time"), (14, "Medication"), (34, "Dose"), (44, "Unit")], meds, n()
    )
    tables["output"] = section("OUTPUT", [(6, "Time"), (14, "Urine (mL)"), (30, "Other (mL)")], output, n())
    tables["comments"] = section("Comments", [], comment, rng.randint(1, 3))
    return DocumentDraft("flowsheet", [page], tables, *_meta(rng, t0))


def _meta(rng: random.Random, when: dt.datetime) -> tuple[dt.datetime, str]:
    generated = when + dt.timedelta(hours=rng.randrange(1, 48), seconds=rng.randrange(3600))
    return generated, f"v{rng.randint(1, 4)}.{rng.randint(0, 9)}"


FORM_BUILDERS = {
    "dcd_flowsheet": make_dcd,
    "liver_data": make_liver,
    "kidney_perfusion_flow_sheet": make_kidney,
    "referral_worksheet": make_referral,
    "flowsheet": make_flowsheet,
}


# -- rendering -----------------------------------------------------------


def _n(value: float) -> str:
    return format_number(round(value, 4))


def box_ops(box: Box) -> list[str]:
    h = BOX_SIDE / 2
    x0, y0 = box.cx - h, box.cy - h
    ops = [f"{_n(BOX_STROKE)} w", f"{_n(x0)} {_n(y0)} {_n(BOX_SIDE)} {_n(BOX_SIDE)} re S"]
    if box.checked and box.style == "fill":
        ops.append(f"{_n(x0)} {_n(y0)} {_n(BOX_SIDE)} {_n(BOX_SIDE)} re f")
    elif box.checked:
        a, b = x0 + X_INSET, x0 + BOX_SIDE - X_INSET
        c, d = y0 + X_INSET, y0 + BOX_SIDE - X_INSET
        ops += [f"{_n(X_STROKE)} w", f"{_n(a)} {_n(c)} m {_n(b)} {_n(d)} l S", f"{_n(a)} {_n(d)} m {_n(b)} {_n(c)} l S"]
    return ops


def expected_lines(page: PageDraft) -> list[str]:
    """The text page the generator intends: each item at its grid cell, lines right-trimmed."""
    if not page.texts:
        return []
    rows = [[] for _ in range(max(t.row for t in page.texts) + 1)]
    for item in page.texts:
        line = rows[item.row]
        end = item.col + len(item.text)
        line.extend(" " * (end - len(line)))
        line[item.col : end] = item.text
    return ["".join(r).rstrip() for r in rows]


def render_page(page: PageDraft) -> bytes:
    ops = ["q", "0 G", "0 g", "1 w", "24 24 564 744 re S"]
    if page.rules:
        ops += ["q", f"{_n(RULE_GRAY)} G", "0.75 w"]
        ops += [f"{_n(x0)} {_n(y0)} m {_n(x1)} {_n(y1)} l S" for x0, y0, x1, y1 in page.rules]
        ops.append("Q")
    for box in page.boxes:
        ops += box_ops(box)
    ops.append("Q")
    ops += ["BT", f"/F1 {FONT_SIZE} Tf"]
    for item in sorted(page.texts, key=lambda t: (t.row, t.col)):
        x, y = item.col * COL_PITCH, PAGE_HEIGHT - item.row * ROW_PITCH
        ops.append(f"1 0 0 1 {_n(x)} {_n(y)} Tm {serialize_value(item.text.encode('cp1252'))} Tj")
    ops.append("ET")
    return ("\n".join(ops) + "\n").encode("latin-1")
