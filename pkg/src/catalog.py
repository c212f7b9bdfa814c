"""Relational types used by the study workloads and the tailored joins."""

from src.meta import parse_schema_declaration

EMPLOYEE = parse_schema_declaration(
    "Employee(name:text, title:text, department:text, jobId:int)"
)
JOB = parse_schema_declaration("Job(post:text, duties:text, jobId:int)")
SALARY = parse_schema_declaration("Salary(post:text, salary:int)")

# Expected result type of Employee x Job, used as interface or result class
EMP_JOB = parse_schema_declaration(
    "EmpJob(name:text, title:text, department:text, jobId:int, post:text, duties:text)"
)
EMP_JOB_SALARY = parse_schema_declaration(
    "EmpJobSalary(name:text, title:text, department:text, jobId:int, "
    "post:text, duties:text, salary:int)"
)

STUDY_SCHEMAS = (EMPLOYEE, JOB, SALARY, EMP_JOB, EMP_JOB_SALARY)


def register_study_schemas(registry):
    """Register the study schemas into a SchemaRegistry."""
    for schema in STUDY_SCHEMAS:
        registry.register(schema)
    return registry
