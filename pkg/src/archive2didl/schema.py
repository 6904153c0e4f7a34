"""Structural validation of output documents against the shipped schemas.

This is a deliberately small interpreter for the XSD subset the shipped
schema files use: global elements, named complex types, sequence and
choice groups with occurrence bounds, element references, attributes with
required/optional use, mixed content, and simpleContent string extension.
It checks what matters for the output contract: element ordering,
cardinality, attribute presence, and namespace correctness.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass, field
from importlib import resources
from xml.etree import ElementTree as ET

XS_NS = "http://www.w3.org/2001/XMLSchema"
XSI_NS = "http://www.w3.org/2001/XMLSchema-instance"

_XS = f"{{{XS_NS}}}"

QName = tuple[str, str]  # (namespace URI, local name)


class SchemaError(ValueError):
    """The schema file itself cannot be interpreted."""


@dataclass
class ElementParticle:
    qname: QName
    min_occurs: int
    max_occurs: int | None  # None = unbounded
    inline_type: "ComplexType | None" = None  # None means look up the global element


@dataclass
class GroupParticle:
    kind: str  # "sequence" | "choice"
    min_occurs: int
    max_occurs: int | None
    parts: list["ElementParticle | GroupParticle"] = field(default_factory=list)


@dataclass
class ComplexType:
    particle: GroupParticle | None = None
    attributes: dict[str, bool] = field(default_factory=dict)  # name -> required
    mixed: bool = False
    simple: bool = False  # text content, no element children


_STRING_TYPE = ComplexType(simple=True)


class Schema:
    def __init__(self) -> None:
        self.elements: dict[QName, ComplexType] = {}
        self.types: dict[QName, ComplexType] = {}
        self.namespaces: set[str] = set()


def _occurs(elem: ET.Element) -> tuple[int, int | None]:
    min_occurs = int(elem.get("minOccurs", "1"))
    raw_max = elem.get("maxOccurs", "1")
    max_occurs = None if raw_max == "unbounded" else int(raw_max)
    return min_occurs, max_occurs


def _format_qname(qname: QName) -> str:
    ns, local = qname
    return f"{{{ns}}}{local}" if ns else local


class _FileLoader:
    """Parses one schema document into a Schema, following imports."""

    def __init__(self, schema: Schema) -> None:
        self.schema = schema

    def load(self, data: bytes, base_dir: str | None = None) -> None:
        nsmap: dict[str, str] = {}
        events = ET.iterparse(io.BytesIO(data), events=("start-ns", "start"))
        root: ET.Element | None = None
        for event, payload in events:
            if event == "start-ns":
                prefix, uri = payload
                nsmap[prefix] = uri
            elif root is None:
                root = payload
        if root is None or root.tag != f"{_XS}schema":
            raise SchemaError("not an XML Schema document")
        target_ns = root.get("targetNamespace", "")
        if target_ns in self.schema.namespaces:
            return
        self.schema.namespaces.add(target_ns)

        pending_imports: list[str] = []
        for child in root:
            if child.tag == f"{_XS}import":
                location = child.get("schemaLocation")
                imported_ns = child.get("namespace", "")
                if imported_ns not in self.schema.namespaces and location:
                    pending_imports.append(location)
            elif child.tag == f"{_XS}element":
                name = child.get("name")
                if not name:
                    raise SchemaError("global element without a name")
                self.schema.elements[(target_ns, name)] = self._element_type(
                    child, target_ns, nsmap
                )
            elif child.tag == f"{_XS}complexType":
                name = child.get("name")
                if not name:
                    raise SchemaError("global complexType without a name")
                self.schema.types[(target_ns, name)] = self._complex_type(
                    child, target_ns, nsmap
                )

        for location in pending_imports:
            if base_dir is None:
                continue
            path = os.path.join(base_dir, location)
            if os.path.isfile(path):
                with open(path, "rb") as fh:
                    self.load(fh.read(), base_dir)

    def _resolve_qname(self, raw: str, nsmap: dict[str, str]) -> QName:
        if ":" in raw:
            prefix, local = raw.split(":", 1)
        else:
            prefix, local = "", raw
        if prefix not in nsmap:
            raise SchemaError(f"unbound schema prefix in {raw!r}")
        return nsmap[prefix], local

    def _element_type(
        self, elem: ET.Element, target_ns: str, nsmap: dict[str, str]
    ) -> ComplexType:
        type_ref = elem.get("type")
        if type_ref is not None:
            qname = self._resolve_qname(type_ref, nsmap)
            if qname == (XS_NS, "string") or qname[0] == XS_NS:
                return _STRING_TYPE
            resolved = self.schema.types.get(qname)
            if resolved is None:
                raise SchemaError(f"unknown type reference: {type_ref!r}")
            return resolved
        inline = elem.find(f"{_XS}complexType")
        if inline is not None:
            return self._complex_type(inline, target_ns, nsmap)
        return _STRING_TYPE

    def _complex_type(
        self, elem: ET.Element, target_ns: str, nsmap: dict[str, str]
    ) -> ComplexType:
        ctype = ComplexType(mixed=elem.get("mixed") == "true")
        simple_content = elem.find(f"{_XS}simpleContent")
        if simple_content is not None:
            extension = simple_content.find(f"{_XS}extension")
            if extension is None:
                raise SchemaError("simpleContent without extension")
            ctype.simple = True
            for attr in extension.findall(f"{_XS}attribute"):
                ctype.attributes[attr.get("name", "")] = attr.get("use") == "required"
            return ctype
        for child in elem:
            if child.tag in (f"{_XS}sequence", f"{_XS}choice"):
                ctype.particle = self._group(child, target_ns, nsmap)
            elif child.tag == f"{_XS}attribute":
                ctype.attributes[child.get("name", "")] = child.get("use") == "required"
        return ctype

    def _group(
        self, elem: ET.Element, target_ns: str, nsmap: dict[str, str]
    ) -> GroupParticle:
        kind = elem.tag.removeprefix(_XS)
        min_occurs, max_occurs = _occurs(elem)
        group = GroupParticle(kind=kind, min_occurs=min_occurs, max_occurs=max_occurs)
        for child in elem:
            if child.tag in (f"{_XS}sequence", f"{_XS}choice"):
                group.parts.append(self._group(child, target_ns, nsmap))
            elif child.tag == f"{_XS}element":
                group.parts.append(self._element_particle(child, target_ns, nsmap))
        return group

    def _element_particle(
        self, elem: ET.Element, target_ns: str, nsmap: dict[str, str]
    ) -> ElementParticle:
        min_occurs, max_occurs = _occurs(elem)
        ref = elem.get("ref")
        if ref is not None:
            return ElementParticle(
                qname=self._resolve_qname(ref, nsmap),
                min_occurs=min_occurs,
                max_occurs=max_occurs,
            )
        name = elem.get("name")
        if not name:
            raise SchemaError("local element needs a name or ref")
        return ElementParticle(
            qname=(target_ns, name),
            min_occurs=min_occurs,
            max_occurs=max_occurs,
            inline_type=self._element_type(elem, target_ns, nsmap),
        )


def load_schema(paths: list[str]) -> Schema:
    """Load one or more schema documents into a single symbol table."""
    schema = Schema()
    loader = _FileLoader(schema)
    for path in paths:
        with open(path, "rb") as fh:
            loader.load(fh.read(), base_dir=os.path.dirname(path) or ".")
    return schema


def load_default_schema() -> Schema:
    """The schemas shipped with the package (document plus vocabulary)."""
    schema = Schema()
    loader = _FileLoader(schema)
    data_dir = resources.files("archive2didl.data")
    # Vocabulary first so the import in the document schema is a no-op.
    loader.load(data_dir.joinpath("pdi.xsd").read_bytes())
    loader.load(data_dir.joinpath("didl.xsd").read_bytes())
    return schema


# --- instance validation --------------------------------------------------


def _split_tag(tag: str) -> QName:
    if tag.startswith("{"):
        ns, local = tag[1:].split("}", 1)
        return ns, local
    return "", tag


class _Validator:
    def __init__(self, schema: Schema) -> None:
        self.schema = schema
        self.violations: list[str] = []

    def element_type(self, qname: QName) -> ComplexType | None:
        return self.schema.elements.get(qname)

    def check(self, elem: ET.Element, ctype: ComplexType, path: str) -> None:
        self._check_attributes(elem, ctype, path)
        children = list(elem)
        if ctype.simple:
            if children:
                self.violations.append(f"{path}: element content not allowed here")
            return
        if not ctype.mixed:
            if elem.text and elem.text.strip():
                self.violations.append(f"{path}: text content not allowed here")
            for child in children:
                if child.tail and child.tail.strip():
                    self.violations.append(f"{path}: text content not allowed here")
                    break
        if ctype.particle is None:
            if children:
                self.violations.append(f"{path}: element content not allowed here")
            return
        consumed = self._match_group(ctype.particle, elem, children, 0, path)
        if consumed < len(children):
            extra = _split_tag(children[consumed].tag)
            self.violations.append(
                f"{path}: unexpected element {_format_qname(extra)}"
            )

    def _check_attributes(self, elem: ET.Element, ctype: ComplexType, path: str) -> None:
        seen = set()
        for raw_name in elem.attrib:
            ns, local = _split_tag(raw_name)
            if ns == XSI_NS:
                continue
            if ns == "" and local in ctype.attributes:
                seen.add(local)
                continue
            self.violations.append(f"{path}: undeclared attribute {raw_name!r}")
        for name, required in ctype.attributes.items():
            if required and name not in seen:
                self.violations.append(f"{path}: missing required attribute {name!r}")

    def _descend(self, child: ET.Element, particle: ElementParticle, path: str) -> None:
        child_path = f"{path}/{_format_qname(particle.qname)}"
        ctype = particle.inline_type or self.element_type(particle.qname)
        if ctype is None:
            self.violations.append(f"{child_path}: element is not declared in the schema")
            return
        self.check(child, ctype, child_path)

    def _first_match(
        self, part: "ElementParticle | GroupParticle", qname: QName
    ) -> ElementParticle | None:
        if isinstance(part, ElementParticle):
            return part if part.qname == qname else None
        for inner in part.parts:
            found = self._first_match(inner, qname)
            if found is not None:
                return found
        return None

    def _match_group(
        self,
        group: GroupParticle,
        parent: ET.Element,
        children: list[ET.Element],
        index: int,
        path: str,
    ) -> int:
        occurs = 0
        while occurs < (group.max_occurs if group.max_occurs is not None else 1 << 30):
            progressed = False
            if group.kind == "sequence":
                start = index
                satisfied = True
                for part in group.parts:
                    index, part_ok = self._match_part(part, parent, children, index, path)
                    satisfied = satisfied and part_ok
                progressed = index > start
                if not satisfied and occurs >= group.min_occurs:
                    break
                if not satisfied:
                    occurs += 1
                    break  # errors already recorded
            else:  # choice
                matched = None
                if index < len(children):
                    qname = _split_tag(children[index].tag)
                    for part in group.parts:
                        if self._first_match(part, qname) is not None:
                            matched = part
                            break
                if matched is None:
                    break
                index, _ = self._match_part(matched, parent, children, index, path)
                progressed = True
            occurs += 1
            if not progressed:
                break
        if occurs < group.min_occurs:
            expected = ", ".join(self._particle_names(group))
            found = (
                _format_qname(_split_tag(children[index].tag))
                if index < len(children)
                else "end of content"
            )
            self.violations.append(f"{path}: expected {expected}, found {found}")
        return index

    def _particle_names(self, part: "ElementParticle | GroupParticle") -> list[str]:
        if isinstance(part, ElementParticle):
            return [_format_qname(part.qname)]
        names: list[str] = []
        for inner in part.parts:
            names.extend(self._particle_names(inner))
        return names

    def _match_part(
        self,
        part: "ElementParticle | GroupParticle",
        parent: ET.Element,
        children: list[ET.Element],
        index: int,
        path: str,
    ) -> tuple[int, bool]:
        if isinstance(part, GroupParticle):
            before = len(self.violations)
            index = self._match_group(part, parent, children, index, path)
            return index, len(self.violations) == before
        count = 0
        while index < len(children) and (
            part.max_occurs is None or count < part.max_occurs
        ):
            if _split_tag(children[index].tag) != part.qname:
                break
            self._descend(children[index], part, path)
            index += 1
            count += 1
        if count < part.min_occurs:
            found = (
                _format_qname(_split_tag(children[index].tag))
                if index < len(children)
                else "end of content"
            )
            self.violations.append(
                f"{path}: expected {_format_qname(part.qname)}, found {found}"
            )
            return index, False
        return index, True


def validate_against_schema(xml: bytes, schema: Schema) -> list[str]:
    """Return all structural violations; an empty list means the document
    conforms.  Unparsable input raises xml.etree.ElementTree.ParseError."""
    root = ET.fromstring(xml)
    validator = _Validator(schema)
    qname = _split_tag(root.tag)
    ctype = schema.elements.get(qname)
    if ctype is None:
        return [f"undeclared root element {_format_qname(qname)}"]
    validator.check(root, ctype, _format_qname(qname))
    return validator.violations
