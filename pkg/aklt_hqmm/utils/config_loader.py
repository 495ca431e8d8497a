from typing import Any, Dict, Optional, Union
from enum import Enum
from pathlib import Path
import json
import logging

import jsonschema
import yaml

from ..models.aklt import ObservableSpec
from ..models.hqmm import HqmmModel


class ConfigFormat(Enum):
    """รูปแบบไฟล์ input ที่รองรับ"""
    YAML = "yaml"
    JSON = "json"


class ConfigParseError(Exception):
    """
    ไฟล์ input อ่านไม่ได้ หรือโครงสร้างไม่ตรง schema

    Attributes:
        line: บรรทัดที่ผิด (ถ้าทราบ)
        column: คอลัมน์ที่ผิด (ถ้าทราบ)
        field: path ของ field ที่ผิดใน document (ถ้าทราบ)
    """

    def __init__(
        self,
        message: str,
        line: Optional[int] = None,
        column: Optional[int] = None,
        field: Optional[str] = None
    ):
        self.line = line
        self.column = column
        self.field = field
        location = []
        if line is not None:
            location.append(f"line {line}")
        if column is not None:
            location.append(f"column {column}")
        if field is not None:
            location.append(f"field '{field}'")
        suffix = f" ({', '.join(location)})" if location else ""
        super().__init__(f"{message}{suffix}")


class ConfigValidationError(Exception):
    """input อ่านได้และตรง schema แต่ค่าไม่สอดคล้องกัน"""
    pass


class ConfigLoader:
    """
    โหลดและตรวจสอบไฟล์ observable และ HQMM model
    รองรับ JSON และ YAML (เลือกตามนามสกุลไฟล์)
    """

    _COMPLEX_MATRIX = {
        "type": "array",
        "minItems": 1,
        "items": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "array",
                "minItems": 2,
                "maxItems": 2,
                "items": {"type": "number"}
            }
        }
    }

    OBSERVABLE_SCHEMA = {
        "$schema": "http://json-schema.org/draft-07/schema#",
        "type": "object",
        "required": ["n_sites"],
        "properties": {
            "n_sites": {"type": "integer", "minimum": 1},
            "factors": {"type": "array", "minItems": 1, "items": {"$ref": "#/definitions/matrix"}},
            "full": {"$ref": "#/definitions/matrix"},
            "description": {"type": "string"}
        },
        "oneOf": [
            {"required": ["factors"]},
            {"required": ["full"]}
        ],
        "additionalProperties": False,
        "definitions": {"matrix": _COMPLEX_MATRIX}
    }

    MODEL_SCHEMA = {
        "$schema": "http://json-schema.org/draft-07/schema#",
        "type": "object",
        "required": ["hidden", "emission"],
        "properties": {
            "initial_state": {
                "oneOf": [
                    {"type": "string", "enum": ["trace", "normalized_trace"]},
                    {
                        "type": "object",
                        "required": ["density"],
                        "properties": {"density": {"$ref": "#/definitions/matrix"}},
                        "additionalProperties": False
                    }
                ]
            },
            "hidden": {"$ref": "#/definitions/expectation"},
            "emission": {"$ref": "#/definitions/expectation"},
            "ordering": {"type": "string", "enum": ["causal", "conventional"]},
            "description": {"type": "string"}
        },
        "additionalProperties": False,
        "definitions": {
            "matrix": _COMPLEX_MATRIX,
            "expectation": {
                "type": "object",
                "properties": {
                    "kraus_pairs": {
                        "type": "array",
                        "minItems": 1,
                        "items": {
                            "type": "array",
                            "minItems": 2,
                            "maxItems": 2,
                            "items": {"$ref": "#/definitions/matrix"}
                        }
                    },
                    "rank_one_trace": {"type": "number"},
                    "dim": {"type": "integer", "minimum": 1},
                    "isometry": {"$ref": "#/definitions/matrix"},
                    "kraus": {"type": "array", "minItems": 1, "items": {"$ref": "#/definitions/matrix"}},
                    "in_dims": {
                        "type": "array",
                        "minItems": 2,
                        "maxItems": 2,
                        "items": {"type": "integer", "minimum": 1}
                    },
                    "swap_inputs": {"type": "boolean"}
                },
                "oneOf": [
                    {"required": ["kraus_pairs"]},
                    {"required": ["rank_one_trace"]},
                    {"required": ["isometry"]},
                    {"required": ["kraus"]}
                ],
                "additionalProperties": False
            }
        }
    }

    def __init__(self):
        self.logger = logging.getLogger("ConfigLoader")
        self.observable_validator = jsonschema.validators.validator_for(self.OBSERVABLE_SCHEMA)(
            self.OBSERVABLE_SCHEMA
        )
        self.model_validator = jsonschema.validators.validator_for(self.MODEL_SCHEMA)(
            self.MODEL_SCHEMA
        )

    def _detect_format(self, path: Path) -> ConfigFormat:
        """ตรวจสอบรูปแบบไฟล์จากนามสกุล"""
        suffix = path.suffix.lower()
        if suffix in {'.yml', '.yaml'}:
            return ConfigFormat.YAML
        elif suffix == '.json':
            return ConfigFormat.JSON
        else:
            raise ConfigParseError(f"Cannot detect format for: {path}")

    def load_file(
        self,
        file_path: Union[str, Path],
        format: Optional[ConfigFormat] = None
    ) -> Any:
        """
        อ่านไฟล์เป็น document (ยังไม่ตรวจ schema)

        Raises:
            ConfigParseError: ถ้าอ่านไฟล์ไม่ได้หรือ syntax ผิด พร้อมบรรทัด/คอลัมน์
        """
        path = Path(file_path)
        if not format:
            format = self._detect_format(path)

        try:
            text = path.read_text(encoding='utf-8')
        except OSError as e:
            raise ConfigParseError(f"Cannot read {path}: {e.strerror or e}")

        if format == ConfigFormat.JSON:
            try:
                return json.loads(text)
            except json.JSONDecodeError as e:
                raise ConfigParseError(f"Malformed JSON in {path}: {e.msg}", line=e.lineno, column=e.colno)

        try:
            return yaml.safe_load(text)
        except yaml.YAMLError as e:
            mark = getattr(e, 'problem_mark', None)
            problem = getattr(e, 'problem', None) or str(e)
            if mark is not None:
                raise ConfigParseError(f"Malformed YAML in {path}: {problem}",
                                       line=mark.line + 1, column=mark.column + 1)
            raise ConfigParseError(f"Malformed YAML in {path}: {problem}")

    def _validate_schema(self, data: Any, validator, kind: str) -> None:
        error = jsonschema.exceptions.best_match(validator.iter_errors(data))
        if error is not None:
            field = "/".join(str(p) for p in error.absolute_path) or "<root>"
            raise ConfigParseError(f"Invalid {kind}: {error.message}", field=field)

    def parse_observable(self, data: Any) -> ObservableSpec:
        """
        ตรวจ schema แล้วแปลง document เป็น ObservableSpec

        Raises:
            ConfigParseError: ถ้าโครงสร้างไม่ตรง schema
            ConfigValidationError: ถ้าขนาดไม่สอดคล้องกัน
        """
        self._validate_schema(data, self.observable_validator, "observable")
        try:
            return ObservableSpec.from_dict(data)
        except ValueError as e:
            # DimensionError, SiteRangeError และ ragged matrix
            raise ConfigValidationError(f"Inconsistent observable: {e}")

    def parse_model(self, data: Any) -> HqmmModel:
        self._validate_schema(data, self.model_validator, "model")
        try:
            return HqmmModel.from_dict(data)
        except ValueError as e:
            raise ConfigValidationError(f"Inconsistent model: {e}")

    def load_observable(self, file_path: Union[str, Path]) -> ObservableSpec:
        spec = self.parse_observable(self.load_file(file_path))
        self.logger.info(f"Loaded {spec.n_sites}-site observable from {file_path}")
        return spec

    def load_model(self, file_path: Union[str, Path]) -> HqmmModel:
        model = self.parse_model(self.load_file(file_path))
        self.logger.info(f"Loaded {model.ordering.value} HQMM model from {file_path}")
        return model

    def save_document(
        self,
        data: Dict[str, Any],
        file_path: Union[str, Path],
        format: Optional[ConfigFormat] = None
    ) -> None:
        """บันทึก document (เช่น observable ที่ทำให้ verification ล้มเหลว) ลงไฟล์"""
        path = Path(file_path)
        if not format:
            format = self._detect_format(path)

        try:
            if format == ConfigFormat.YAML:
                with path.open('w', encoding='utf-8') as f:
                    yaml.safe_dump(data, f, default_flow_style=False, sort_keys=True)
            else:
                with path.open('w', encoding='utf-8') as f:
                    json.dump(data, f, indent=2, sort_keys=True)
        except Exception as e:
            self.logger.error(f"Error saving document: {e}")
            raise
